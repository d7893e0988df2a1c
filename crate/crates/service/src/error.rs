use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use smsp_core::ontology::OntologyError;
use smsp_core::resolution::ResolutionError;
use smsp_core::session::{ExportError, SessionError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Location {
    pub domain_id: String,
    pub line: usize,
    pub column: usize,
}

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

#[derive(Debug, thiserror::Error)]
#[error("{}", body.message)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code, message: message.into(), location: None } }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
    }

    pub fn storage(e: std::io::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<OntologyError> for ApiError {
    fn from(e: OntologyError) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_ontology", e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Parse { domain_id, error } => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: ErrorBody {
                    code: "parse_error",
                    message: format!("{domain_id}: {}", error.message),
                    location: Some(Location { domain_id, line: error.line, column: error.column }),
                },
            },
            SessionError::Ontology(e) => e.into(),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<ResolutionError> for ApiError {
    fn from(e: ResolutionError) -> Self {
        let (status, code) = match &e {
            ResolutionError::UnknownConflict(_) => (StatusCode::NOT_FOUND, "unknown_conflict"),
            ResolutionError::AlreadyResolved(_) => (StatusCode::CONFLICT, "already_resolved"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_action"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ExportError> for ApiError {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::UnknownDomain(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_domain", e.to_string()),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}
