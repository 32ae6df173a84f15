use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use narrasim::story::Action;
use narrasim::trace::write_traces;
use serde::{Deserialize, Serialize};

use crate::error::{ErrorBody, ServiceError};
use crate::store::{SessionStore, TraceFilter};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Debug, Default, Deserialize)]
pub struct CreateSession {
    pub story_id: Option<String>,
    pub prior_session_id: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct PostAction {
    #[serde(flatten)]
    pub action: Action,
    pub token: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct PostQuestionnaire {
    pub answers: Vec<i64>,
    pub familiar: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Health {
    status: &'static str,
    stories: usize,
    sessions: usize,
}

type Shared = State<Arc<SessionStore>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

/// Runs a store call off the async executor, since it may block on file
/// writes and session locks.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))?
}

async fn health(State(store): Shared) -> Json<Health> {
    Json(Health {
        status: "ok",
        stories: store.stories().len(),
        sessions: store.session_count(),
    })
}

async fn stories(State(store): Shared) -> impl IntoResponse {
    Json(store.stories())
}

async fn create_session(
    State(store): Shared,
    payload: axum::body::Bytes,
) -> Result<Response, ServiceError> {
    let req: CreateSession = if payload.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&payload).map_err(|e| ServiceError::BadRequest(e.to_string()))?
    };
    let view = blocking(move || {
        store.create_session(req.story_id.as_deref(), req.prior_session_id.as_deref())
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(store): Shared, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(store.view(&id)?).into_response())
}

async fn get_actions(State(store): Shared, Path(id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(store.actions(&id)?).into_response())
}

async fn post_action(
    State(store): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<PostAction>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let header_token = headers
        .get(IDEMPOTENCY_HEADER)
        .map(|v| {
            v.to_str()
                .map(str::to_owned)
                .map_err(|_| ServiceError::BadRequest("idempotency key is not text".into()))
        })
        .transpose()?;
    let token = req.token.or(header_token);
    let outcome = blocking(move || store.post_action(&id, req.action, token)).await?;
    Ok(Json(outcome).into_response())
}

async fn post_questionnaire(
    State(store): Shared,
    Path(id): Path<String>,
    payload: Result<Json<PostQuestionnaire>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let outcome =
        blocking(move || store.post_questionnaire(&id, req.answers, req.familiar)).await?;
    Ok(Json(outcome).into_response())
}

/// Human traces as line-delimited JSON, in the simulation trace format.
async fn traces(
    State(store): Shared,
    filter: Result<Query<TraceFilter>, QueryRejection>,
) -> Result<Response, ServiceError> {
    let Query(filter) = filter.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let mut out = Vec::new();
    write_traces(&mut out, &store.traces(&filter))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
}

async fn no_route() -> Response {
    let body = ErrorBody {
        code: "not_found",
        message: "no such endpoint".into(),
    };
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

pub fn api_routes(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/stories", get(stories))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/actions", get(get_actions).post(post_action))
        .route("/api/sessions/{id}/questionnaire", post(post_questionnaire))
        .route("/api/traces", get(traces))
        .route("/api/{*rest}", axum::routing::any(no_route))
        .with_state(store)
}
