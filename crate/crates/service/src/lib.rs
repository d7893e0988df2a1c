//! HTTP session service over the policy matching pipeline.
//!
//! Sessions persist as JSON files under a data directory (`SMSP_DATA_DIR`
//! by default). Writers of one session are serialized; readers work on the
//! last saved snapshot.

mod api;
mod error;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, session_inputs, ConflictView, CreateSession, DecisionOutcome, SessionCreated};
pub use error::{ApiError, ErrorBody, Location};
pub use store::Store;

pub const DATA_DIR_VAR: &str = "SMSP_DATA_DIR";

/// `SMSP_DATA_DIR`, or `./smsp-data` when unset.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_VAR).map_or_else(|| PathBuf::from("smsp-data"), PathBuf::from)
}

pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let store = Arc::new(Store::open(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
