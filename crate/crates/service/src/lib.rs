//! HTTP service for blind human annotation.
//!
//! | Method | Path                            |                                   |
//! |--------|---------------------------------|-----------------------------------|
//! | GET    | `/api/health`                   | liveness probe                    |
//! | GET    | `/api/session/{id}/next`        | next pending segment, or done     |
//! | POST   | `/api/session/{id}/decision`    | `{"segment_id", "decision"}`      |
//! | GET    | `/api/session/{id}/report`      | scores of the decisions so far    |
//! | GET    | `/api/reference?task=binary`    | reference material for annotators |
//!
//! Anything else is served from the static directory, if one is configured.
//! Gold labels and region metadata never appear in a response.

mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use alemannic::agent::{AttachmentKind, PromptSet};
use alemannic::Task;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use session::{
    session_dir, valid_id, Ack, Choice, Decision, NextPayload, SegmentPayload, Session, SessionError, SessionMeta,
    SessionReport, SessionState,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("data directory {0}: {1}")]
    DataDir(String, String),
    #[error("static directory {0} does not exist")]
    StaticDir(String),
    #[error("service config: {0}")]
    Config(String),
    #[error("cannot bind {0}: {1}")]
    Bind(SocketAddr, std::io::Error),
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

/// ```toml
/// data_dir = "annotation-data"
/// bind = "127.0.0.1:8080"
/// static_dir = "ui/dist"   # optional
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            bind: default_bind(),
            static_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }
}

type Shared = Arc<Mutex<Session>>;

/// Shared handler state: open sessions are cached, one lock each, so writes
/// to a session are serialized while other sessions proceed.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    data_dir: PathBuf,
    prompts: PromptSet,
    sessions: Mutex<HashMap<String, Shared>>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let dir = &config.data_dir;
        let meta =
            std::fs::metadata(dir).map_err(|e| ServiceError::DataDir(dir.display().to_string(), e.to_string()))?;
        if !meta.is_dir() {
            return Err(ServiceError::DataDir(
                dir.display().to_string(),
                "not a directory".into(),
            ));
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                data_dir: dir.clone(),
                prompts: PromptSet::bundled(),
                sessions: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.inner.data_dir
    }

    fn session(&self, id: &str) -> Result<Shared, SessionError> {
        let mut open = self.inner.sessions.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(s) = open.get(id) {
            return Ok(s.clone());
        }
        let s = Arc::new(Mutex::new(Session::open(&self.inner.data_dir, id)?));
        open.insert(id.to_string(), s.clone());
        Ok(s)
    }

    /// Runs `f` on the session off the async executor; file syncs block.
    async fn with_session<T: Send + 'static>(
        &self,
        id: String,
        f: impl FnOnce(&mut Session) -> Result<T, SessionError> + Send + 'static,
    ) -> Result<T, ApiError> {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let shared = state.session(&id)?;
            let mut session = shared.lock().unwrap_or_else(|e| e.into_inner());
            f(&mut session)
        })
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
    }
}

struct ApiError(StatusCode, String);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::NotFound(_) | SessionError::UnknownSegment(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidId(_) | SessionError::WrongTask(..) => StatusCode::BAD_REQUEST,
            SessionError::Conflict { .. } | SessionError::Exists(_) => StatusCode::CONFLICT,
            SessionError::Empty => StatusCode::UNPROCESSABLE_ENTITY,
            _ => {
                log::error!("{e}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

#[derive(Deserialize)]
struct DecisionBody {
    segment_id: String,
    decision: String,
}

#[derive(Deserialize)]
struct ReferenceQuery {
    task: Option<String>,
}

#[derive(Serialize)]
struct ReferenceSection {
    title: &'static str,
    text: String,
}

#[derive(Serialize)]
struct Reference {
    task: Task,
    instructions: String,
    sections: Vec<ReferenceSection>,
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn next(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<NextPayload>, ApiError> {
    state.with_session(id, |s| Ok(s.next())).await.map(Json)
}

async fn decision(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<DecisionBody>,
) -> Result<Json<Ack>, ApiError> {
    let choice: Choice = body
        .decision
        .parse()
        .map_err(|e: String| ApiError(StatusCode::BAD_REQUEST, e))?;
    state
        .with_session(id, move |s| s.decide(&body.segment_id, choice))
        .await
        .map(Json)
}

async fn report(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionReport>, ApiError> {
    state.with_session(id, |s| s.report()).await.map(Json)
}

async fn reference(
    State(state): State<AppState>,
    Query(q): Query<ReferenceQuery>,
) -> Result<Json<Reference>, ApiError> {
    let task: Task = match q.task {
        Some(t) => t
            .parse()
            .map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("{e}")))?,
        None => Task::Binary,
    };
    let prompts = &state.inner.prompts;
    Ok(Json(Reference {
        task,
        instructions: prompts.system_prompt(task),
        sections: AttachmentKind::ALL
            .into_iter()
            .map(|k| ReferenceSection {
                title: k.title(),
                text: prompts.attachment(k, task),
            })
            .collect(),
    }))
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/session/{id}/next", get(next))
        .route("/api/session/{id}/decision", post(decision))
        .route("/api/session/{id}/report", get(report))
        .route("/api/reference", get(reference))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Validates the config, binds and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::new(&config)?;
    if let Some(dir) = &config.static_dir {
        if !dir.is_dir() {
            return Err(ServiceError::StaticDir(dir.display().to_string()));
        }
    }
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| ServiceError::Bind(config.bind, e))?;
    log::info!("listening on {}", config.bind);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
