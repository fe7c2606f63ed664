//! HTTP and WebSocket surface of the review service.

use std::net::SocketAddr;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

use crate::documents::StateDocument;
use crate::experiment::{prepare, ExperimentConfig, ExperimentError};
use crate::runner::{RunReport, Runner};
use crate::service::{self, LiveMessage, ServiceError, ServiceHandle};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JudgementBody {
    pub suspicious: bool,
}

#[derive(Debug, Deserialize)]
pub struct AlertQuery {
    pub status: Option<String>,
}

struct ApiError(StatusCode, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::UnknownAlert(_) | ServiceError::AlreadyJudged(_) => StatusCode::CONFLICT,
            ServiceError::QueueFull | ServiceError::Paused => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Stopped => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(handle: ServiceHandle) -> Router {
    Router::new()
        .route("/state", get(state))
        .route("/alerts", get(alerts))
        .route("/alerts/{id}/judgement", post(judgement))
        .route("/control/{action}", post(control))
        .route("/report", get(report))
        .route("/ledger", get(ledger))
        .route("/snapshot", get(snapshot).post(restore))
        .route("/live", get(live))
        .with_state(handle)
}

async fn state(State(handle): State<ServiceHandle>) -> Json<crate::service::Summary> {
    Json(handle.summary())
}

async fn alerts(
    State(handle): State<ServiceHandle>,
    Query(query): Query<AlertQuery>,
) -> ApiResult<Vec<crate::service::PendingAlert>> {
    match query.status.as_deref() {
        None | Some("pending") => Ok(Json(handle.pending().await?)),
        Some(other) => Err(ApiError(StatusCode::BAD_REQUEST, format!("unsupported status {other:?}"))),
    }
}

async fn judgement(
    State(handle): State<ServiceHandle>,
    Path(id): Path<u64>,
    Json(body): Json<JudgementBody>,
) -> ApiResult<crate::service::Summary> {
    Ok(Json(handle.submit_judgement(id, body.suspicious).await?))
}

async fn control(
    State(handle): State<ServiceHandle>,
    Path(action): Path<String>,
) -> ApiResult<crate::service::Summary> {
    match action.as_str() {
        "pause" => Ok(Json(handle.pause().await?)),
        "resume" => Ok(Json(handle.resume().await?)),
        other => Err(ApiError(StatusCode::NOT_FOUND, format!("unknown control action {other:?}"))),
    }
}

async fn report(State(handle): State<ServiceHandle>) -> ApiResult<RunReport> {
    Ok(Json(handle.report().await?))
}

async fn ledger(State(handle): State<ServiceHandle>) -> ApiResult<Vec<crate::service::LedgerRow>> {
    match handle.ledger().await? {
        Some(rows) => Ok(Json(rows)),
        None => Err(ApiError(StatusCode::NOT_FOUND, "ledgers exist only in auction mode".into())),
    }
}

async fn snapshot(State(handle): State<ServiceHandle>) -> ApiResult<StateDocument> {
    Ok(Json(handle.snapshot().await?))
}

async fn restore(State(handle): State<ServiceHandle>, body: String) -> ApiResult<crate::service::Summary> {
    let doc = StateDocument::from_json(&body).map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(Json(handle.restore(doc).await?))
}

async fn live(State(handle): State<ServiceHandle>, upgrade: WebSocketUpgrade) -> Response {
    upgrade.on_upgrade(move |socket| push_live(socket, handle))
}

async fn push_live(mut socket: WebSocket, handle: ServiceHandle) {
    let mut feed = handle.subscribe();
    let s = handle.summary();
    let hello = LiveMessage::Stats {
        event_rate: s.event_rate,
        active_size: s.active_size,
        pending: s.pending,
        events_processed: s.events_processed,
        mistakes: s.mistakes,
    };
    if send(&mut socket, &hello).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            message = feed.recv() => match message {
                Ok(message) => {
                    if send(&mut socket, &message).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}

async fn send(socket: &mut WebSocket, message: &LiveMessage) -> Result<(), axum::Error> {
    let text = serde_json::to_string(message).expect("live messages serialize");
    socket.send(Message::Text(text.into())).await
}

/// Serves the API until `shutdown` resolves.
pub async fn serve(
    handle: ServiceHandle,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(handle)).with_graceful_shutdown(shutdown).await
}

/// Runs `config` behind the review service at `addr`: the stream is fed
/// into the service while the API serves, until ctrl-c. Returns the final
/// report after writing the requested outputs.
pub async fn run_served(config: ExperimentConfig, addr: SocketAddr) -> Result<RunReport, ExperimentError> {
    let prepared = prepare(&config)?;
    let runner = match &config.restore {
        Some(path) => Runner::restore(
            StateDocument::load(path)?,
            prepared.pool.clone(),
            prepared.oracle.clone(),
            prepared.rules.clone(),
        )?,
        None => {
            Runner::new(config.engine_config(), prepared.pool.clone(), prepared.oracle.clone(), prepared.rules.clone())?
        }
    };
    let already = runner.metrics().counts.events as usize;
    let handle = service::spawn(runner, config.queue_capacity);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ExperimentError::Output(format!("cannot bind {addr}: {e}")))?;
    eprintln!("serving on http://{}", listener.local_addr().map_err(|e| ExperimentError::Output(e.to_string()))?);

    let feeder = handle.clone();
    let feeding = tokio::spawn(async move {
        let events = prepared.source.events()?;
        feeder.feed(events.skip(already)).await.map_err(|e| ExperimentError::Output(e.to_string()))
    });
    serve(handle.clone(), listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
    .map_err(|e| ExperimentError::Output(e.to_string()))?;
    feeding.abort();

    let report = handle.report().await.map_err(|e| ExperimentError::Output(e.to_string()))?;
    if let Some(path) = &config.snapshot {
        let doc = handle.snapshot().await.map_err(|e| ExperimentError::Output(e.to_string()))?;
        doc.save(path)?;
    }
    if let Some(path) = &config.report {
        std::fs::write(path, report.to_json_pretty() + "\n").map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    Ok(report)
}
