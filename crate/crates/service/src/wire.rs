//! WebSocket message schema, version 1.
//!
//! Every frame is a JSON object `{"v": 1, "seq": n, "type": ..., ...}`.
//! Client frames carry the client's own increasing `seq`; server frames
//! carry the server's `seq` and, when answering a client frame, its number
//! in `reply_to`. Timestamps `t` are the client's monotonic clock in ms.

use serde::{Deserialize, Serialize};
use srdp_core::session::{EngineOutput, EngineView, Input, Verdict};
use srdp_core::transition::ActionKind;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEnvelope {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub msg: ClientMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// First frame on a connection; anchors the client clock.
    Hello {
        t: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client: Option<String>,
    },
    InputEvent {
        t: u64,
        input: Input,
    },
    /// Starts the first trial, or the next one after a verdict.
    Jump {
        t: u64,
    },
    /// Re-synchronise after a reconnect.
    Resume {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        last_seq: Option<u64>,
    },
    /// Advances engine time without input.
    Tick {
        t: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEnvelope {
    pub v: u32,
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<u64>,
    #[serde(flatten)]
    pub msg: ServerMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnsupportedVersion,
    NotStarted,
    Clock,
    SessionFinished,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    View {
        view: EngineView,
    },
    ActionCommitted {
        kind: ActionKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<usize>,
        q: usize,
        at: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response_ms: Option<u64>,
    },
    Animating {
        until: u64,
    },
    Verdict {
        order: usize,
        verdict: Verdict,
        at: u64,
    },
    SessionDone {
        at: u64,
        log_name: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl ServerMessage {
    /// Client-facing projection of an engine output; internal bookkeeping
    /// outputs map to nothing.
    pub fn from_output(out: &EngineOutput, log_name: &str) -> Option<Self> {
        match out {
            EngineOutput::ActionCommitted {
                kind,
                s,
                q,
                at,
                response_ms,
            } => Some(ServerMessage::ActionCommitted {
                kind: *kind,
                s: *s,
                q: *q,
                at: *at,
                response_ms: *response_ms,
            }),
            EngineOutput::Animating { until } => Some(ServerMessage::Animating { until: *until }),
            EngineOutput::Verdict { order, verdict, at } => Some(ServerMessage::Verdict {
                order: *order,
                verdict: *verdict,
                at: *at,
            }),
            EngineOutput::SessionDone { at } => Some(ServerMessage::SessionDone {
                at: *at,
                log_name: log_name.to_string(),
            }),
            _ => None,
        }
    }
}

/// Returned by `POST /api/sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub protocol: u32,
    pub session_id: String,
    /// Identifies the presentation order; equal seeds give equal plans.
    pub plan_id: String,
    pub plan: srdp_core::session::SessionPlan,
    pub view: EngineView,
    pub log_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub subject_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub practice: bool,
    #[serde(default)]
    pub agent: Option<String>,
}

/// Returned by `GET /api/sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub view: EngineView,
    pub events: usize,
    pub complete: bool,
    pub log_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub name: String,
    pub bytes: u64,
}
