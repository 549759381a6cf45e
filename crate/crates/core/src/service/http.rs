//! HTTP front end.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | `{"config": "<run config toml>", "iec": {...}?, "running": bool}` | session info |
//! | GET | `/sessions` | | list of session info |
//! | GET | `/sessions/{id}` | | session info |
//! | POST | `/sessions/{id}/commands` | a command, e.g. `{"op":"step","n":10}` | response |
//! | GET | `/sessions/{id}/stream?decimation=10&capacity=8` | | frames, each prefixed by its `u32` LE length |
//! | DELETE | `/sessions/{id}` | | 204 |

use std::net::SocketAddr;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::iec::IecConfig;
use super::session::{Command, ServiceError, SessionId, SessionInfo, SessionRegistry, SessionSpec};
use crate::io::parse_config;

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub config: String,
    #[serde(default)]
    pub iec: Option<IecConfig>,
    #[serde(default)]
    pub running: bool,
}

#[derive(Debug, Deserialize)]
pub struct StreamQuery {
    #[serde(default = "one")]
    pub decimation: u64,
    #[serde(default = "eight")]
    pub capacity: usize,
}

fn one() -> u64 {
    1
}

fn eight() -> usize {
    8
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

struct ApiError(StatusCode, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let code = match e {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Closed => StatusCode::GONE,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn create(State(reg): State<SessionRegistry>, Json(req): Json<CreateRequest>) -> Result<HttpResponse, ApiError> {
    let config = parse_config(&req.config, None).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    let spec = SessionSpec { config, iec: req.iec, start_running: req.running };
    let info = blocking(move || reg.create(spec).map(|h| h.info())).await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn list(State(reg): State<SessionRegistry>) -> Json<Vec<SessionInfo>> {
    Json(reg.ids().into_iter().filter_map(|id| reg.get(id).ok()).map(|h| h.info()).collect())
}

async fn show(State(reg): State<SessionRegistry>, Path(id): Path<SessionId>) -> Result<Json<SessionInfo>, ApiError> {
    Ok(Json(reg.get(id)?.info()))
}

async fn command(
    State(reg): State<SessionRegistry>,
    Path(id): Path<SessionId>,
    Json(cmd): Json<Command>,
) -> Result<Json<super::session::Response>, ApiError> {
    let handle = reg.get(id)?;
    Ok(Json(blocking(move || handle.request(cmd)).await?))
}

async fn destroy(State(reg): State<SessionRegistry>, Path(id): Path<SessionId>) -> Result<StatusCode, ApiError> {
    blocking(move || reg.destroy(id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn stream(
    State(reg): State<SessionRegistry>,
    Path(id): Path<SessionId>,
    Query(q): Query<StreamQuery>,
) -> Result<HttpResponse, ApiError> {
    let handle = reg.get(id)?;
    let frames = blocking(move || handle.stream_frames(q.decimation, q.capacity)).await?;
    let (tx, rx) = tokio::sync::mpsc::channel::<Bytes>(1);
    tokio::task::spawn_blocking(move || {
        for f in frames.iter() {
            let mut chunk = Vec::with_capacity(4 + f.len());
            chunk.extend_from_slice(&(f.len() as u32).to_le_bytes());
            chunk.extend_from_slice(&f);
            if tx.blocking_send(Bytes::from(chunk)).is_err() {
                break;
            }
        }
    });
    let body = futures_util::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|b| (Ok::<_, std::io::Error>(b), rx))
    });
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], Body::from_stream(body)).into_response())
}

pub fn router(registry: SessionRegistry) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(show).delete(destroy))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(registry)
}

/// Serve until ctrl-c; all sessions are destroyed on the way out.
pub async fn serve(addr: SocketAddr, registry: SessionRegistry) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "serving");
    let shutdown_reg = registry.clone();
    axum::serve(listener, router(registry))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    shutdown_reg.destroy_all();
    Ok(())
}
