use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use smsp_core::conflicts::ConflictRecord;
use smsp_core::enrichment::EnrichmentConfig;
use smsp_core::ontology::load_ontology;
use smsp_core::policy::DeonticTable;
use smsp_core::resolution::{ActionEffects, ActionOp, Catalogue, DecidedBy, ResolutionAction, ResolutionError};
use smsp_core::session::{ExportFormat, ExportWhat, PolicyInput, SessionInputs, SessionState, SessionSummary};
use smsp_core::similarity::SimilarityConfig;

use crate::error::ApiError;
use crate::store::Store;

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Ontology document, inline.
    pub support: serde_json::Value,
    pub policies: Vec<PolicyInput>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub enrichment: EnrichmentConfig,
    #[serde(default)]
    pub catalogue: Option<Catalogue>,
    #[serde(default)]
    pub deontic: Option<DeonticTable>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub summary: SessionSummary,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConflictView {
    #[serde(flatten)]
    pub record: ConflictRecord,
    pub proposals: Vec<ResolutionAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct DecisionBody {
    #[serde(default = "expert")]
    pub decided_by: DecidedBy,
    /// Optional; must match the path when present.
    #[serde(default)]
    pub conflict_id: Option<String>,
    #[serde(flatten)]
    pub op: ActionOp,
}

fn expert() -> DecidedBy {
    DecidedBy::Expert
}

#[derive(Debug, Default, Deserialize)]
pub struct DecisionQuery {
    #[serde(default)]
    pub enrich: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub summary: SessionSummary,
    pub effects: ActionEffects,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub what: ExportWhat,
    #[serde(default)]
    pub format: ExportFormat,
    pub domain: Option<String>,
}

fn json_body<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/conflicts", get(get_conflicts))
        .route("/sessions/{id}/correspondences", get(get_correspondences))
        .route("/sessions/{id}/conflicts/{cid}/decision", post(post_decision))
        .route("/sessions/{id}/export", get(export))
        .with_state(store)
}

/// Builds session inputs from a create request.
pub fn session_inputs(req: CreateSession) -> ApiResult<SessionInputs> {
    let support_bytes = serde_json::to_vec(&req.support).expect("json value serializes");
    let support = load_ontology(&support_bytes)?;
    Ok(SessionInputs {
        support,
        policies: req.policies,
        similarity: req.similarity,
        enrichment: req.enrichment,
        catalogue: req.catalogue.unwrap_or_default(),
        deontic: req.deontic.unwrap_or_default(),
    })
}

async fn create_session(State(store): State<Arc<Store>>, body: Bytes) -> ApiResult<Response> {
    let inputs = session_inputs(json_body(&body)?)?;
    let id = smsp_core::session::session_id(&inputs);
    let lock = store.lock(&id);
    let _guard = lock.lock().await;
    // Same inputs, same id: hand back the stored session untouched.
    if store.exists(&id).await {
        let s = store.load(&id).await?;
        return Ok((StatusCode::OK, Json(SessionCreated { session_id: id, summary: s.summary() })).into_response());
    }
    let state = tokio::task::spawn_blocking(move || SessionState::create(inputs))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    store.save(&state).await?;
    let out = SessionCreated { session_id: state.session_id.clone(), summary: state.summary() };
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn get_session(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<SessionSummary>> {
    Ok(Json(store.load(&id).await?.summary()))
}

async fn get_conflicts(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<Vec<ConflictView>>> {
    let s = store.load(&id).await?;
    let views = s
        .remaining_conflicts()
        .into_iter()
        .map(|c| {
            let p = s.proposals(c)?;
            Ok(ConflictView { record: c.clone(), proposals: p.actions, advisory: p.advisory })
        })
        .collect::<Result<Vec<_>, ResolutionError>>()?;
    Ok(Json(views))
}

fn bytes_response(content_type: &'static str, bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, content_type)], bytes).into_response()
}

async fn get_correspondences(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = store.load(&id).await?;
    let bytes = s.export(ExportWhat::Correspondences, ExportFormat::Canonical, None)?;
    Ok(bytes_response("application/json", bytes))
}

async fn post_decision(
    State(store): State<Arc<Store>>,
    Path((id, cid)): Path<(String, String)>,
    Query(q): Query<DecisionQuery>,
    body: Bytes,
) -> ApiResult<Json<DecisionOutcome>> {
    let body: DecisionBody = json_body(&body)?;
    if body.conflict_id.as_ref().is_some_and(|c| *c != cid) {
        return Err(ApiError::bad_request("conflict_id in the body does not match the path"));
    }
    let action = ResolutionAction { conflict_id: cid, decided_by: body.decided_by, op: body.op };
    let lock = store.lock(&id);
    let _guard = lock.lock().await;
    let s = store.load(&id).await?;
    let (next, effects) = tokio::task::spawn_blocking(move || s.decide(&action, q.enrich, now_ms()))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    store.save(&next).await?;
    Ok(Json(DecisionOutcome { summary: next.summary(), effects }))
}

async fn export(State(store): State<Arc<Store>>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let s = store.load(&id).await?;
    let bytes = s.export(q.what, q.format, q.domain.as_deref())?;
    let ct = match (q.what, q.format, &q.domain) {
        (_, ExportFormat::Turtle, _) => "text/turtle",
        (ExportWhat::HarmonizedPolicies, _, Some(_)) => "text/plain; charset=utf-8",
        _ => "application/json",
    };
    Ok(bytes_response(ct, bytes))
}
