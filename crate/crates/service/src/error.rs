use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use narrasim::{EngineError, ProfileError, StoryError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown story `{0}`")]
    UnknownStory(String),
    #[error("session `{0}` has already ended")]
    SessionEnded(String),
    #[error("prior session `{0}` has not reached an ending")]
    PriorUnfinished(String),
    #[error("prior session `{prior}` belongs to story `{story}`")]
    PriorStoryMismatch { prior: String, story: String },
    #[error(transparent)]
    IllegalAction(#[from] EngineError),
    #[error("invalid answers: {0}")]
    InvalidAnswers(#[from] ProfileError),
    #[error("idempotency token `{0}` was already used for a different action")]
    TokenConflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("story file {path}: {source}")]
    Story { path: PathBuf, source: StoryError },
    #[error("story `{id}` is invalid: {summary}")]
    InvalidStory { id: String, summary: String },
    #[error("session log {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

/// Error body returned by every endpoint.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::UnknownSession(_) | Self::UnknownStory(_) => StatusCode::NOT_FOUND,
            Self::SessionEnded(_) | Self::PriorUnfinished(_) | Self::TokenConflict(_) => {
                StatusCode::CONFLICT
            }
            Self::PriorStoryMismatch { .. }
            | Self::IllegalAction(_)
            | Self::InvalidAnswers(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Story { .. }
            | Self::InvalidStory { .. }
            | Self::Corrupt { .. }
            | Self::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownSession(_) => "unknown_session",
            Self::UnknownStory(_) => "unknown_story",
            Self::SessionEnded(_) => "session_ended",
            Self::PriorUnfinished(_) => "prior_unfinished",
            Self::PriorStoryMismatch { .. } => "prior_story_mismatch",
            Self::IllegalAction(_) => "illegal_action",
            Self::InvalidAnswers(_) => "invalid_answers",
            Self::TokenConflict(_) => "token_conflict",
            Self::BadRequest(_) => "bad_request",
            Self::Story { .. } | Self::InvalidStory { .. } => "invalid_story",
            Self::Corrupt { .. } | Self::Io(_) => "storage",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!("{self}");
        }
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}
