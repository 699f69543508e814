use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use hina_core::{ClusterError, HinError, IngestError, MetricsError, PruneError};
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub enum ApiError {
    /// 404 for a dataset, network or cluster id not present in the session.
    UnknownId,
    /// 400 for bodies or parameters that cannot be decoded.
    Malformed(String),
    /// 422 for well-formed requests the data cannot satisfy; carries the
    /// module error name.
    Data { name: &'static str, message: String },
    /// 503 when clustering overruns the time budget.
    Busy { retry_after_secs: u64 },
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownId => StatusCode::NOT_FOUND,
            ApiError::Malformed(_) => StatusCode::BAD_REQUEST,
            ApiError::Data { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Busy { .. } => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        let body = match &self {
            ApiError::UnknownId => json!({ "error": "UnknownId" }),
            ApiError::Malformed(m) => json!({ "error": "Malformed", "message": m }),
            ApiError::Data { name, message } => json!({ "error": name, "message": message }),
            ApiError::Busy { retry_after_secs } => json!({
                "error": "Busy",
                "message": "clustering exceeded the time budget and continues in the background",
                "retry_after": retry_after_secs,
            }),
            ApiError::Internal(m) => json!({ "error": "Internal", "message": m }),
        };
        let mut response = (status, axum::Json(body)).into_response();
        if let ApiError::Busy { retry_after_secs } = self {
            response.headers_mut().insert(
                header::RETRY_AFTER,
                HeaderValue::from_str(&retry_after_secs.to_string()).expect("digits"),
            );
        }
        response
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidSpec(m) => ApiError::Malformed(m),
            other => ApiError::Data {
                name: other.name(),
                message: other.to_string(),
            },
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                ApiError::Data { name: e.name(), message: e.to_string() }
            }
        }
    )*};
}

data_error!(HinError, MetricsError, PruneError);

impl From<ClusterError> for ApiError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::UnknownCluster(_) => ApiError::UnknownId,
            other => ApiError::Data {
                name: other.name(),
                message: other.to_string(),
            },
        }
    }
}
