use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use bntune_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

/// Error body `{code, message, detail}` with its HTTP status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Serialize)]
struct Body<'a> {
    v: u32,
    code: &'a str,
    message: &'a str,
    detail: &'a Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn unknown_revision(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_revision", format!("no revision `{id}`"))
            .with_detail(json!({ "id": id }))
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_body", message)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = if err.is_input_error() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::UNPROCESSABLE_ENTITY
        };
        let detail = match &err {
            Error::Parse { line, column, .. } => json!({ "line": line, "column": column }),
            Error::Cycle(path) => json!({ "cycle": path }),
            Error::UnknownVariable(name) => json!({ "variable": name }),
            Error::UnknownValue { variable, value } => json!({ "variable": variable, "value": value }),
            Error::Boundary { what, value } => json!({ "operation": what, "value": value }),
            Error::StateSpaceTooLarge { states, cap } => {
                json!({ "states": states.to_string(), "cap": cap.to_string() })
            }
            _ => Value::Null,
        };
        Self {
            status,
            code: err.code(),
            message: err.to_string(),
            detail,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            v: crate::API_VERSION,
            code: self.code,
            message: &self.message,
            detail: &self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}
