use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use resto_core::{MdpError, NetworkError, PlannerError, ScenarioError};
use serde_json::json;

/// Error body: `{"error":{"code":..,"message":..,"field":..}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: String,
}

impl ApiError {
    pub fn new(
        status: StatusCode,
        code: &'static str,
        message: impl Into<String>,
        field: impl Into<String>,
    ) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: field.into(),
        }
    }

    pub fn malformed(message: impl Into<String>, field: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed", message, field)
    }

    pub fn schema(message: impl Into<String>, field: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "schema", message, field)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session {id}"),
            "id",
        )
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, "")
    }

    /// Maps a planner error raised while handling an observation or goal
    /// change. `field` prefixes the reported path.
    pub fn from_planner(err: &PlannerError, field: &str) -> Self {
        let message = err.to_string();
        match err {
            PlannerError::OutcomeOutsideAction(j) | PlannerError::MissingOutcome(j) => Self::new(
                StatusCode::CONFLICT,
                "observation_mismatch",
                message,
                format!("{field}outcomes.{j}"),
            ),
            PlannerError::InfeasibleAction { .. } => Self::new(
                StatusCode::CONFLICT,
                "infeasible_action",
                message,
                format!("{field}action"),
            ),
            PlannerError::ImpossibleOutcome { .. } => Self::new(
                StatusCode::CONFLICT,
                "impossible_outcome",
                message,
                format!("{field}outcomes"),
            ),
            PlannerError::Network(NetworkError::UnknownBus(_))
            | PlannerError::Mdp(MdpError::Network(NetworkError::UnknownBus(_))) => {
                Self::schema(message, format!("{field}bus"))
            }
            PlannerError::Mdp(MdpError::StateLimitExceeded(_)) => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "state_limit",
                message,
                field.trim_end_matches('.'),
            ),
            _ => Self::schema(message, field.trim_end_matches('.')),
        }
    }

    pub fn from_scenario(err: &ScenarioError) -> Self {
        match err {
            ScenarioError::Parse(m) => Self::schema(m.clone(), ""),
            ScenarioError::Planner(p) => {
                let mut e = Self::from_planner(p, "");
                if e.field.is_empty() || e.field == "bus" {
                    e.field = err.field().to_string();
                }
                e
            }
            other => Self::schema(other.to_string(), other.field()),
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ({}): {}",
            self.code,
            self.status.as_u16(),
            self.message
        )
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "error": {"code": self.code, "message": self.message, "field": self.field}
        });
        (self.status, Json(body)).into_response()
    }
}

/// Parses a JSON body in two stages so that broken JSON (400) and
/// well-formed JSON of the wrong shape (422) are told apart.
pub fn parse_body<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ApiError::malformed(e.to_string(), ""))?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { String::new() } else { path };
        ApiError::schema(e.into_inner().to_string(), field)
    })
}
