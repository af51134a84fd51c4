//! HTTP and WebSocket front end. One engine per session; frames of a
//! session are handled strictly in order under its lock.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::serve::ListenerExt;
use axum::{Json, Router};
use srdp_core::corpus::{validate_corpus, CorpusFile};
use srdp_core::session::{Session, SessionHeader};
use tokio::sync::Mutex as AsyncMutex;
use tower_http::services::ServeDir;

use crate::commands::{make_plan, read_corpus};
use crate::config::ServiceConfig;
use crate::error::Failure;
use crate::live::LiveSession;
use crate::wire::{
    ClientEnvelope, CreateSession, ErrorCode, LogEntry, ServerEnvelope, ServerMessage,
    SessionCreated, SessionState, PROTOCOL_VERSION,
};

type Shared = Arc<AsyncMutex<LiveSession>>;

pub struct AppState {
    config: ServiceConfig,
    corpus: CorpusFile,
    sessions: Mutex<HashMap<String, Shared>>,
}

impl AppState {
    /// Loads and validates the corpus and creates the log directory.
    pub fn new(config: ServiceConfig) -> Result<Self, Failure> {
        config.validate()?;
        let corpus = read_corpus(config.corpus.as_deref())?;
        let report = validate_corpus(&corpus);
        if !report.is_valid() {
            let first: Vec<String> = report
                .issues
                .iter()
                .take(5)
                .map(|i| i.to_string())
                .collect();
            return Err(Failure::Data(format!(
                "corpus failed validation ({} issues): {}",
                report.issues.len(),
                first.join("; ")
            )));
        }
        std::fs::create_dir_all(&config.log_dir)
            .map_err(|e| Failure::io(config.log_dir.display().to_string(), e))?;
        Ok(AppState {
            config,
            corpus,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn session(&self, id: &str) -> Option<Shared> {
        self.sessions.lock().expect("session map").get(id).cloned()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_state))
        .route("/api/sessions/{id}/ws", get(session_socket))
        .route("/api/logs", get(list_logs))
        .route("/api/logs/{name}", get(download_log));
    let api = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.with_state(state)
}

pub async fn serve(config: ServiceConfig) -> Result<(), Failure> {
    let listen = config.listen;
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .map_err(|e| Failure::io(format!("bind {listen}"), e))?;
    log::info!(
        "listening on {}",
        listener.local_addr().map_or(listen, |a| a)
    );
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), Failure> {
    // several small frames per reply; Nagle would hold all but the first
    let listener = listener.tap_io(|tcp| {
        if let Err(e) = tcp.set_nodelay(true) {
            log::warn!("TCP_NODELAY: {e}");
        }
    });
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Failure::io("serve", e))
}

fn api_error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

fn sanitize(subject: &str) -> String {
    subject
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Response {
    if req.subject_id.trim().is_empty() {
        return api_error(StatusCode::BAD_REQUEST, "subject_id must not be empty");
    }
    let seed = req
        .seed
        .or(state.config.default_seed)
        .unwrap_or_else(|| uuid::Uuid::new_v4().as_u64_pair().0);
    let plan = match make_plan(&state.corpus, &req.subject_id, seed, req.practice) {
        Ok(p) => p,
        Err(e) => return api_error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let agent = req.agent.unwrap_or_else(|| "ui".into());
    let header = SessionHeader::new(agent, plan.clone(), state.config.engine);
    let engine = match Session::new(header, &state.corpus) {
        Ok(e) => e,
        Err(e) => return api_error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let log_path = state
        .config
        .log_dir
        .join(format!("{}_{}.jsonl", sanitize(&req.subject_id), id));
    let live = LiveSession::new(id.clone(), engine, log_path);
    let body = SessionCreated {
        protocol: PROTOCOL_VERSION,
        session_id: id.clone(),
        plan_id: format!("{}-{seed}", if req.practice { "practice" } else { "main" }),
        plan,
        view: live.engine().view(),
        log_name: live.log_name.clone(),
    };
    state
        .sessions
        .lock()
        .expect("session map")
        .insert(id, Arc::new(AsyncMutex::new(live)));
    (StatusCode::CREATED, Json(body)).into_response()
}

async fn session_state(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(shared) = state.session(&id) else {
        return api_error(StatusCode::NOT_FOUND, format!("unknown session {id}"));
    };
    let live = shared.lock().await;
    Json(SessionState {
        session_id: id,
        view: live.engine().view(),
        events: live.journal().len(),
        complete: live.engine().is_done(),
        log_name: live.log_name.clone(),
    })
    .into_response()
}

async fn session_socket(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Response {
    let Some(shared) = state.session(&id) else {
        return api_error(StatusCode::NOT_FOUND, format!("unknown session {id}"));
    };
    ws.on_upgrade(move |socket| run_socket(socket, state, shared))
}

/// Pulls `seq` out of a frame that failed to parse, for `reply_to`.
fn salvage_seq(text: &str) -> Option<u64> {
    serde_json::from_str::<serde_json::Value>(text)
        .ok()?
        .get("seq")?
        .as_u64()
}

async fn run_socket(mut socket: WebSocket, state: Arc<AppState>, shared: Shared) {
    let grace = state
        .config
        .auto_tick
        .then(|| Duration::from_millis(state.config.auto_tick_grace_ms));
    let mut out_seq = 0u64;
    let mut wakeup: Option<(u64, tokio::time::Instant)> = None;
    loop {
        let replies: Vec<(Option<u64>, ServerMessage)> = tokio::select! {
            frame = socket.recv() => {
                let text = match frame {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                match serde_json::from_str::<ClientEnvelope>(&text) {
                    Ok(env) => {
                        let seq = env.seq;
                        let mut live = shared.lock().await;
                        live.handle(env, &state.corpus).into_iter().map(|m| (Some(seq), m)).collect()
                    }
                    Err(e) => vec![(
                        salvage_seq(&text),
                        ServerMessage::Error { code: ErrorCode::Malformed, message: e.to_string() },
                    )],
                }
            }
            _ = async { tokio::time::sleep_until(wakeup.expect("guarded").1).await }, if wakeup.is_some() => {
                let deadline = wakeup.take().expect("guarded").0;
                let mut live = shared.lock().await;
                live.tick_deadline(deadline, &state.corpus).into_iter().map(|m| (None, m)).collect()
            }
        };
        for (reply_to, msg) in replies {
            out_seq += 1;
            let env = ServerEnvelope {
                v: PROTOCOL_VERSION,
                seq: out_seq,
                reply_to,
                msg,
            };
            let text = serde_json::to_string(&env).expect("serializable frame");
            if socket.send(Message::Text(text.into())).await.is_err() {
                return;
            }
        }
        if let Some(grace) = grace {
            let live = shared.lock().await;
            wakeup = live
                .next_wakeup(grace)
                .map(|(d, at)| (d, tokio::time::Instant::from_std(at)));
        }
    }
}

async fn list_logs(State(state): State<Arc<AppState>>) -> Response {
    let dir = &state.config.log_dir;
    let Ok(entries) = std::fs::read_dir(dir) else {
        return api_error(
            StatusCode::INTERNAL_SERVER_ERROR,
            "log directory unreadable",
        );
    };
    let mut logs: Vec<LogEntry> = entries
        .filter_map(Result::ok)
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let meta = e.metadata().ok()?;
            (meta.is_file() && name.ends_with(".jsonl")).then_some(LogEntry {
                name,
                bytes: meta.len(),
            })
        })
        .collect();
    logs.sort_by(|a, b| a.name.cmp(&b.name));
    Json(logs).into_response()
}

fn valid_log_name(name: &str) -> bool {
    name.ends_with(".jsonl")
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

async fn download_log(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> Response {
    if !valid_log_name(&name) {
        return api_error(StatusCode::BAD_REQUEST, "invalid log name");
    }
    match tokio::fs::read(state.config.log_dir.join(&name)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response(),
        Err(_) => api_error(StatusCode::NOT_FOUND, format!("no log named {name}")),
    }
}
