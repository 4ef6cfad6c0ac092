//! HTTP/JSON API under `/v1`. See `API.md` for payloads.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::model::{BatchRequest, CorrectionRecord, JudgmentSubmission, Phase};
use crate::{AnnotationError, Workspace};

pub const WORKSPACE_KEY_HEADER: &str = "x-workspace-key";

#[derive(Clone)]
struct AppState {
    workspace: Arc<Workspace>,
    key: Option<Arc<str>>,
}

#[derive(Serialize)]
struct Problem {
    code: &'static str,
    message: String,
}

impl IntoResponse for AnnotationError {
    fn into_response(self) -> Response {
        use AnnotationError as E;
        let status = match &self {
            E::EmptyBatch | E::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            E::UnknownPair(_) => StatusCode::NOT_FOUND,
            E::Unauthorized => StatusCode::UNAUTHORIZED,
            E::PhaseMismatch { .. }
            | E::DuplicateBatch(_)
            | E::PairConflict(_)
            | E::WrongState { .. }
            | E::AlreadyCorrected(_)
            | E::Judgment(_) => StatusCode::CONFLICT,
            E::ConfigMismatch { .. } | E::Corrupt { .. } | E::Store(_) | E::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = Problem {
            code: self.code(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

async fn require_key(State(app): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(key) = &app.key {
        let given = req.headers().get(WORKSPACE_KEY_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(key.as_ref()) {
            return AnnotationError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

#[derive(Deserialize)]
struct NextQuery {
    phase: Phase,
    rater: String,
}

async fn next_task(State(app): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    if q.rater.trim().is_empty() {
        return AnnotationError::Validation("rater must be non-empty".into()).into_response();
    }
    match app.workspace.next_task(q.phase, &q.rater) {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn corrections(State(app): State<AppState>, Json(rec): Json<CorrectionRecord>) -> Result<Response, AnnotationError> {
    Ok(Json(app.workspace.submit_correction(rec)?).into_response())
}

async fn judgments(State(app): State<AppState>, Json(sub): Json<JudgmentSubmission>) -> Result<Response, AnnotationError> {
    Ok(Json(app.workspace.submit_judgment(sub)?).into_response())
}

async fn pair(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Response, AnnotationError> {
    Ok(Json(app.workspace.pair(id)?).into_response())
}

async fn aggregate(State(app): State<AppState>, Path(id): Path<u64>) -> Result<Response, AnnotationError> {
    Ok(Json(app.workspace.aggregate_judgments(id)?).into_response())
}

async fn stats(State(app): State<AppState>) -> Response {
    Json(app.workspace.stats()).into_response()
}

async fn batches(State(app): State<AppState>, Json(req): Json<BatchRequest>) -> Result<Response, AnnotationError> {
    let out = app.workspace.enqueue_batch(req)?;
    let status = if out.created > 0 { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(out)).into_response())
}

/// Routes for `workspace`. With `key` set, every request must carry it in
/// the `x-workspace-key` header.
pub fn router(workspace: Arc<Workspace>, key: Option<String>) -> Router {
    let app = AppState {
        workspace,
        key: key.map(Into::into),
    };
    Router::new()
        .route("/v1/tasks/next", get(next_task))
        .route("/v1/corrections", post(corrections))
        .route("/v1/judgments", post(judgments))
        .route("/v1/pairs/{id}", get(pair))
        .route("/v1/pairs/{id}/judgment", get(aggregate))
        .route("/v1/stats", get(stats))
        .route("/v1/batches", post(batches))
        .layer(middleware::from_fn_with_state(app.clone(), require_key))
        .with_state(app)
}

pub async fn serve(workspace: Arc<Workspace>, key: Option<String>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(workspace, key)).await
}
