//! JSON-over-HTTP front end for the engine, versioned under `/v1`.

mod log;

use std::future::Future;
use std::net::SocketAddr;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::config::ServiceConfig;
use crate::lang::Lang;
use crate::qa_engine::{AskRequest, AskResponse, Engine, EngineError, EngineHandle};
use crate::retrieval::Backend;

pub use log::{read_interaction_log, InteractionLog, InteractionLogRecord, LogLine, LoggedAnswer, Vote};

/// Error body `{"error": {"code", "message"}}` with its status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::InvalidRequest(_) => Self::bad_request(message),
            EngineError::NoIndex { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "unsupported", message)
            }
            EngineError::Provider(_) => Self::new(StatusCode::BAD_GATEWAY, "provider_error", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Deserialize)]
struct AskBody {
    question: String,
    #[serde(default)]
    top_k: Option<usize>,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    lesson: Option<u32>,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskReply {
    #[serde(flatten)]
    pub response: AskResponse,
    pub interaction_id: String,
}

#[derive(Debug, Deserialize)]
struct FeedbackBody {
    interaction_id: String,
    vote: String,
}

#[derive(Clone)]
pub struct AppState {
    pub engine: EngineHandle,
    pub log: InteractionLog,
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn unsupported(message: String) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unsupported", message)
}

impl AskBody {
    fn into_request(self) -> Result<AskRequest, ApiError> {
        if self.question.trim().is_empty() {
            return Err(ApiError::bad_request("question must not be empty"));
        }
        let lang_override = self
            .lang
            .map(|l| l.parse::<Lang>().map_err(|e| unsupported(e.to_string())))
            .transpose()?;
        let backend = self
            .backend
            .map(|b| b.parse::<Backend>().map_err(|e| unsupported(e.to_string())))
            .transpose()?;
        if self.threshold.is_some_and(|t| !t.is_finite()) {
            return Err(ApiError::bad_request("threshold must be finite"));
        }
        Ok(AskRequest {
            question: self.question,
            top_k: self.top_k,
            lang_override,
            lesson: self.lesson,
            threshold: self.threshold,
            backend,
            ignore_tags: false,
        })
    }
}

async fn ask(State(state): State<AppState>, body: Bytes) -> Result<Json<AskReply>, ApiError> {
    let req = parse_json::<AskBody>(&body)?.into_request()?;
    let engine = state.engine.current();
    let backend = req.backend.unwrap_or(engine.default_backend());
    let question = req.question.clone();

    let start = Instant::now();
    let result = tokio::task::spawn_blocking(move || engine.ask(&req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let latency_ms = start.elapsed().as_secs_f64() * 1e3;

    let response = match result {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(error = %e, latency_ms, "ask failed");
            return Err(e.into());
        }
    };
    let interaction_id = uuid::Uuid::new_v4().to_string();
    state.log.record(InteractionLogRecord {
        interaction_id: interaction_id.clone(),
        timestamp: Utc::now(),
        question,
        lang_detected: response.lang_detected,
        backend,
        answers: response
            .answers
            .iter()
            .map(|a| LoggedAnswer {
                id: a.id.clone(),
                score: a.score,
            })
            .collect(),
        answered: response.answered,
        latency_ms,
        feedback: None,
    });
    tracing::info!(%interaction_id, lang = %response.lang_detected, answered = response.answered, latency_ms, "ask");
    Ok(Json(AskReply {
        response,
        interaction_id,
    }))
}

async fn feedback(State(state): State<AppState>, body: Bytes) -> Result<Json<serde_json::Value>, ApiError> {
    let body: FeedbackBody = parse_json(&body)?;
    let vote: Vote = body.vote.parse().map_err(ApiError::bad_request)?;
    if !state.log.feedback(&body.interaction_id, vote) {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_interaction",
            format!("no recent interaction {}", body.interaction_id),
        ));
    }
    Ok(Json(json!({"ok": true})))
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let engine = state.engine.current();
    Json(json!({
        "status": "ok",
        "languages": engine.languages(),
        "backends": engine.backends(),
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/ask", post(ask))
        .route("/v1/feedback", post(feedback))
        .route("/v1/health", get(health))
        .route("/health", get(health))
        .fallback(not_found)
        .with_state(state)
}

/// A bound but not yet running service.
pub struct Service {
    state: AppState,
    listener: TcpListener,
    log_task: JoinHandle<()>,
}

impl Service {
    pub async fn bind(
        engine: EngineHandle,
        addr: SocketAddr,
        log_path: Option<&std::path::Path>,
        window: usize,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        let (log, log_task) = InteractionLog::open(log_path, window)?;
        Ok(Self {
            state: AppState { engine, log },
            listener,
            log_task,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> &AppState {
        &self.state
    }

    /// Serves until `shutdown` resolves, lets in-flight requests finish,
    /// then drains the interaction log.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
        let Service {
            state,
            listener,
            log_task,
        } = self;
        let log = state.log.clone();
        let served = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
        log.close();
        let _ = log_task.await;
        served?;
        Ok(())
    }
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Loads every configured index (failing on the first error), binds and
/// serves until a termination signal.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let cfg = config.clone();
    let engine: Engine = tokio::task::spawn_blocking(move || cfg.build_engine()).await??;
    tracing::info!(languages = ?engine.languages(), backends = ?engine.backends(), "engine loaded");
    let service = Service::bind(
        EngineHandle::new(engine),
        config.service.bind,
        config.service.log_path.as_deref(),
        config.service.feedback_window,
    )
    .await
    .map_err(|e| anyhow::anyhow!("cannot bind {}: {e}", config.service.bind))?;
    tracing::info!(addr = %service.local_addr()?, "listening");
    service.run(shutdown_signal()).await?;
    tracing::info!("shut down");
    Ok(())
}
