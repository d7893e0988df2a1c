use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use smsp_core::session::SessionState;

use crate::error::ApiError;

/// One JSON document per session under a data directory.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

fn valid_id(id: &str) -> bool {
    id.starts_with("s-") && id.len() <= 64 && id[2..].chars().all(|c| c.is_ascii_hexdigit())
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Store> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Store { dir, locks: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Lock serializing writers of one session.
    pub fn lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock table poisoned").entry(id.to_string()).or_default().clone()
    }

    pub async fn exists(&self, id: &str) -> bool {
        valid_id(id) && tokio::fs::try_exists(self.path(id)).await.unwrap_or(false)
    }

    pub async fn load(&self, id: &str) -> Result<SessionState, ApiError> {
        if !valid_id(id) {
            return Err(ApiError::unknown_session(id));
        }
        let bytes = match tokio::fs::read(self.path(id)).await {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(ApiError::unknown_session(id)),
            Err(e) => return Err(ApiError::storage(e)),
        };
        SessionState::from_bytes(&bytes).map_err(|e| ApiError::storage(io::Error::new(io::ErrorKind::InvalidData, e)))
    }

    /// Writes through a temporary file so readers never see a partial
    /// snapshot.
    pub async fn save(&self, state: &SessionState) -> Result<(), ApiError> {
        let path = self.path(&state.session_id);
        let tmp = path.with_extension("json.tmp");
        tokio::fs::write(&tmp, state.to_bytes()).await.map_err(ApiError::storage)?;
        tokio::fs::rename(&tmp, &path).await.map_err(ApiError::storage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids() {
        assert!(valid_id("s-0123456789abcdef"));
        assert!(!valid_id("s-../../etc"));
        assert!(!valid_id("x-00"));
    }
}
