use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// JSON error body: `{"error": message, "constraint": optional}`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub constraint: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>, constraint: Option<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: error.into(),
                constraint,
            },
        }
    }

    pub fn unprocessable(error: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error, None)
    }

    pub fn not_found(error: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, error, None)
    }
}

impl From<aos_core::Error> for ApiError {
    fn from(e: aos_core::Error) -> Self {
        use aos_core::Error;
        match e {
            Error::Infeasible { message, constraint } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, message, Some(constraint))
            }
            Error::EmptyWindow { path_min, path_max, .. } => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                e.to_string(),
                Some(format!("aperture windows must overlap the poses in [{path_min}, {path_max}] m")),
            ),
            e if e.is_usage() => Self::unprocessable(e.to_string()),
            e => Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string(), None),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
