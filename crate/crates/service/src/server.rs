//! HTTP and WebSocket front of the demo.
//!
//! | route                      | method | body                              |
//! |----------------------------|--------|-----------------------------------|
//! | `/stream?sample_rate=16000`| GET    | WebSocket; omit the rate to watch |
//! | `/status`                  | GET    | status JSON                       |
//! | `/enrollment/export`       | GET    | enrollment set, binary            |
//! | `/enrollment/import`       | POST   | enrollment set, binary            |
//!
//! One thread owns the [`Demo`]; connections talk to it over a channel.
//! Pipeline events are broadcast to every connected socket; a socket that
//! falls behind loses the oldest events and is told how many.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::SinkExt;
use serde::Deserialize;
use tokio::sync::{broadcast, mpsc, oneshot};

use tinysv::config::AppConfig;
use tinysv::nn::WeightBundle;
use tinysv::pipeline::Pipeline;

use crate::messages::{parse_control, ClientMessage, ErrorCode, ServerMessage, Status};
use crate::{Demo, ServiceError, SessionId};

/// Events a socket may fall behind by before it starts losing them.
pub const CLIENT_EVENT_BUFFER: usize = 256;

enum Job {
    Open(u32, oneshot::Sender<Result<(SessionId, Status), ServiceError>>),
    Close(SessionId),
    Message(SessionId, ClientMessage, oneshot::Sender<Vec<ServerMessage>>),
    Status(oneshot::Sender<Status>),
    Export(oneshot::Sender<Vec<u8>>),
    Import(Vec<u8>, oneshot::Sender<Result<Status, ServiceError>>),
}

/// Cloneable access to the pipeline thread.
#[derive(Clone)]
pub struct ServiceHandle {
    jobs: mpsc::UnboundedSender<Job>,
    events: broadcast::Sender<Arc<str>>,
}

/// Moves `demo` onto its own thread. The thread ends when every handle is
/// dropped.
pub fn spawn(mut demo: Demo) -> ServiceHandle {
    let (jobs, mut rx) = mpsc::unbounded_channel::<Job>();
    let (events, _) = broadcast::channel::<Arc<str>>(CLIENT_EVENT_BUFFER);
    let fanout = events.clone();
    std::thread::Builder::new()
        .name("pipeline".into())
        .spawn(move || {
            while let Some(job) = rx.blocking_recv() {
                match job {
                    Job::Open(rate, reply) => {
                        let _ = reply.send(demo.open_session(rate));
                    }
                    Job::Close(id) => demo.close_session(id),
                    Job::Message(id, msg, reply) => {
                        let audio = matches!(msg, ClientMessage::AudioChunk(_));
                        let mut direct = Vec::new();
                        for m in demo.handle_message(id, msg) {
                            if audio && !matches!(m, ServerMessage::Error { .. }) {
                                let _ = fanout.send(m.to_json().into());
                            } else {
                                direct.push(m);
                            }
                        }
                        let _ = reply.send(direct);
                    }
                    Job::Status(reply) => {
                        let _ = reply.send(demo.status());
                    }
                    Job::Export(reply) => {
                        let _ = reply.send(demo.export_enrollment());
                    }
                    Job::Import(bytes, reply) => {
                        let _ = reply.send(demo.import_enrollment(&bytes));
                    }
                }
            }
        })
        .expect("spawning the pipeline thread");
    ServiceHandle { jobs, events }
}

impl ServiceHandle {
    async fn ask<T>(&self, make: impl FnOnce(oneshot::Sender<T>) -> Job) -> Option<T> {
        let (tx, rx) = oneshot::channel();
        self.jobs.send(make(tx)).ok()?;
        rx.await.ok()
    }

    pub async fn status(&self) -> Option<Status> {
        self.ask(Job::Status).await
    }
}

pub fn router(handle: ServiceHandle) -> Router {
    Router::new()
        .route("/stream", get(stream))
        .route("/status", get(status))
        .route("/enrollment/export", get(export))
        .route("/enrollment/import", post(import))
        .with_state(handle)
}

fn unavailable() -> Response {
    (StatusCode::SERVICE_UNAVAILABLE, "pipeline stopped").into_response()
}

async fn status(State(h): State<ServiceHandle>) -> Response {
    match h.status().await {
        Some(s) => Json(s).into_response(),
        None => unavailable(),
    }
}

async fn export(State(h): State<ServiceHandle>) -> Response {
    match h.ask(Job::Export).await {
        Some(bytes) => ([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response(),
        None => unavailable(),
    }
}

async fn import(State(h): State<ServiceHandle>, body: Bytes) -> Response {
    match h.ask(|tx| Job::Import(body.to_vec(), tx)).await {
        Some(Ok(s)) => Json(s).into_response(),
        Some(Err(e)) => (
            StatusCode::BAD_REQUEST,
            Json(ServerMessage::error(ErrorCode::Rejected, e.to_string())),
        )
            .into_response(),
        None => unavailable(),
    }
}

#[derive(Debug, Deserialize)]
struct StreamParams {
    sample_rate: Option<u32>,
}

async fn stream(
    ws: WebSocketUpgrade,
    Query(params): Query<StreamParams>,
    State(h): State<ServiceHandle>,
) -> Response {
    ws.on_upgrade(move |socket| client(socket, params.sample_rate, h))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    socket.send(Message::Text(msg.to_json().into())).await.is_ok()
}

async fn client(mut socket: WebSocket, sample_rate: Option<u32>, h: ServiceHandle) {
    let mut events = h.events.subscribe();
    let session = match sample_rate {
        Some(rate) => match h.ask(|tx| Job::Open(rate, tx)).await {
            Some(Ok((id, status))) => {
                if !send(&mut socket, &ServerMessage::Status(status)).await {
                    h.jobs.send(Job::Close(id)).ok();
                    return;
                }
                Some(id)
            }
            Some(Err(e)) => {
                let code = match e {
                    ServiceError::RateMismatch { .. } => ErrorCode::RateMismatch,
                    ServiceError::ProducerBusy => ErrorCode::ProducerBusy,
                    _ => ErrorCode::Internal,
                };
                send(&mut socket, &ServerMessage::error(code, e.to_string())).await;
                let _ = socket.close().await;
                return;
            }
            None => return,
        },
        None => match h.status().await {
            Some(s) => {
                if !send(&mut socket, &ServerMessage::Status(s)).await {
                    return;
                }
                None
            }
            None => return,
        },
    };

    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let msg = match incoming {
                    Some(Ok(Message::Text(t))) => parse_control(t.as_str()),
                    Some(Ok(Message::Binary(b))) => Ok(ClientMessage::AudioChunk(b.to_vec())),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let replies = match (msg, session) {
                    (Err(e), _) => vec![ServerMessage::error(ErrorCode::Malformed, e)],
                    (Ok(ClientMessage::GetStatus), None) => match h.status().await {
                        Some(s) => vec![ServerMessage::Status(s)],
                        None => break,
                    },
                    (Ok(_), None) => vec![ServerMessage::error(
                        ErrorCode::NotProducer,
                        "watch-only connection; reconnect with ?sample_rate= to send audio or commands",
                    )],
                    (Ok(m), Some(id)) => match h.ask(|tx| Job::Message(id, m, tx)).await {
                        Some(r) => r,
                        None => break,
                    },
                };
                for r in &replies {
                    if !send(&mut socket, r).await {
                        break;
                    }
                }
            }
            event = events.recv() => {
                let text = match event {
                    Ok(t) => t,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        ServerMessage::error(ErrorCode::Lagged, format!("{n} events dropped")).to_json().into()
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    break;
                }
            }
        }
    }
    if let Some(id) = session {
        h.jobs.send(Job::Close(id)).ok();
    }
}

/// Builds the pipeline described by `config`.
pub fn build_demo(config: &AppConfig) -> Result<Demo, ServiceError> {
    let ks = WeightBundle::load(&config.keyword_bundle)?;
    let fx = WeightBundle::load(&config.dvector_bundle)?;
    let pipeline = Pipeline::from_bundles(config.pipeline.clone(), ks, fx)?;
    let demo = Demo::new(pipeline)?;
    match &config.enrollment_file {
        Some(p) => demo.with_enrollment_file(p),
        None => Ok(demo),
    }
}

/// Serves on `127.0.0.1:<config.port>` until the process ends.
pub async fn serve(config: &AppConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let handle = spawn(build_demo(config)?);
    let addr = SocketAddr::from(([127, 0, 0, 1], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(handle)).await?;
    Ok(())
}
