//! HTTP session service for human play-throughs.
//!
//! Players are anonymous. Each session plays one story through the engine
//! and its actions are persisted as they happen, so finished sessions can be
//! exported as traces in the same format the simulator writes.

mod api;
mod error;
mod store;
mod view;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use tower_http::services::{ServeDir, ServeFile};

pub use api::{api_routes, CreateSession, PostAction, PostQuestionnaire, IDEMPOTENCY_HEADER};
pub use error::{ErrorBody, ServiceError};
pub use store::{
    load_stories, ActionOutcome, QuestionnaireOutcome, SessionStore, StorySummary, TraceFilter,
    Triggered,
};
pub use view::{
    action_label, action_views, ActionView, ActionsView, EndingView, LocationView, Named,
    QuestionnaireView, SessionView, StatementView,
};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub stories_dir: PathBuf,
    pub data_dir: PathBuf,
    /// Static files for the play client, served at `/`.
    pub assets_dir: Option<PathBuf>,
    pub addr: SocketAddr,
}

/// The API routes plus, when given, the client's static files.
pub fn app(store: Arc<SessionStore>, assets_dir: Option<PathBuf>) -> Router {
    let api = api_routes(store);
    match assets_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => api,
    }
}

pub fn open_store(config: &ServiceConfig) -> Result<SessionStore, ServiceError> {
    let stories = load_stories(&config.stories_dir)?;
    SessionStore::open(&config.data_dir, stories)
}

/// Binds the configured address and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let store = Arc::new(open_store(&config)?);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(store, config.assets_dir)).await?;
    Ok(())
}
