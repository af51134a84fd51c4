use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{EngineConfig, InputEvent, Session, SessionError, SessionPlan};
use crate::corpus::CorpusFile;
use crate::transition::{ActionCounts, ActionKind, Arc, SentenceType};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "OK")]
    Ok,
    #[serde(rename = "NG")]
    Ng,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        self == Verdict::Ok
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "OK",
            Verdict::Ng => "NG",
        })
    }
}

/// First record of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub schema_version: u32,
    /// Who produced the inputs, e.g. `ui` or `bot:oracle`.
    pub agent: String,
    pub plan: SessionPlan,
    pub config: EngineConfig,
    /// Engine time at which the first trial was started.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at_ms: Option<u64>,
}

impl SessionHeader {
    pub fn new(agent: impl Into<String>, plan: SessionPlan, config: EngineConfig) -> Self {
        SessionHeader {
            schema_version: LOG_SCHEMA_VERSION,
            agent: agent.into(),
            plan,
            config,
            started_at_ms: None,
        }
    }
}

/// One executed transition within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedAction {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub q: usize,
    pub committed_at_ms: u64,
    /// Time from the start of the judgment window to the commit; judged
    /// actions only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_ms: Option<u64>,
}

/// Everything recorded about one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLog {
    pub sentence_id: String,
    /// 1-based presentation position.
    pub order: usize,
    pub block: super::Block,
    pub category: SentenceType,
    pub phrases: usize,
    pub morae: u32,
    pub chars: u32,
    pub started_at_ms: u64,
    pub ended_at_ms: u64,
    pub actions: Vec<LoggedAction>,
    pub direction_alternations: u32,
    pub verdict: Verdict,
    pub arcs: Vec<Arc>,
    /// Inputs consumed since the previous trial ended, in arrival order.
    pub events: Vec<InputEvent>,
}

impl TrialLog {
    pub fn counts(&self) -> ActionCounts {
        ActionCounts::from_kinds(self.actions.iter().map(|a| a.kind))
    }

    pub fn judged_response_ms(&self) -> u64 {
        self.actions.iter().filter_map(|a| a.response_ms).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Complete,
    Aborted,
}

/// Closing record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionFooter {
    pub status: SessionStatus,
    pub ended_at_ms: u64,
    /// Inputs not belonging to a finished trial (aborted sessions).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pending_events: Vec<InputEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LogRecord {
    Header(SessionHeader),
    Trial(TrialLog),
    Footer(SessionFooter),
}

/// A whole session: header, finished trials and (once closed) a footer.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub trials: Vec<TrialLog>,
    pub footer: Option<SessionFooter>,
}

impl SessionLog {
    pub fn is_complete(&self) -> bool {
        matches!(
            self.footer,
            Some(SessionFooter {
                status: SessionStatus::Complete,
                ..
            })
        )
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        let mut w = SessionLogWriter::new(&mut buf);
        w.write_header(&self.header).expect("write to vec");
        for t in &self.trials {
            w.write_trial(t).expect("write to vec");
        }
        if let Some(f) = &self.footer {
            w.write_footer(f).expect("write to vec");
        }
        String::from_utf8(buf).expect("utf-8 json")
    }
}

/// Append-only writer: a header line, one line per trial, a footer line.
pub struct SessionLogWriter<W: Write> {
    out: W,
}

impl<W: Write> SessionLogWriter<W> {
    pub fn new(out: W) -> Self {
        SessionLogWriter { out }
    }

    fn record(&mut self, r: &LogRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, r)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    pub fn write_header(&mut self, h: &SessionHeader) -> std::io::Result<()> {
        self.record(&LogRecord::Header(h.clone()))
    }

    pub fn write_trial(&mut self, t: &TrialLog) -> std::io::Result<()> {
        self.record(&LogRecord::Trial(t.clone()))
    }

    pub fn write_footer(&mut self, f: &SessionFooter) -> std::io::Result<()> {
        self.record(&LogRecord::Footer(f.clone()))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn parse_session_log(text: &str) -> Result<SessionLog, SessionError> {
    let mut header = None;
    let mut trials = Vec::new();
    let mut footer = None;
    for (i, l) in text.lines().enumerate() {
        let line = i + 1;
        if l.trim().is_empty() {
            continue;
        }
        let err = |message: String| SessionError::LogFormat { line, message };
        let rec: LogRecord = serde_json::from_str(l).map_err(|e| err(e.to_string()))?;
        match rec {
            LogRecord::Header(h) => {
                if header.is_some() {
                    return Err(err("second header".into()));
                }
                if h.schema_version != LOG_SCHEMA_VERSION {
                    return Err(err(format!(
                        "unsupported schema version {}",
                        h.schema_version
                    )));
                }
                header = Some(h);
            }
            LogRecord::Trial(t) => {
                if header.is_none() || footer.is_some() {
                    return Err(err("trial record outside header/footer".into()));
                }
                trials.push(t);
            }
            LogRecord::Footer(f) => {
                if header.is_none() || footer.is_some() {
                    return Err(err("misplaced footer".into()));
                }
                footer = Some(f);
            }
        }
    }
    Ok(SessionLog {
        header: header.ok_or(SessionError::LogFormat {
            line: 1,
            message: "missing header".into(),
        })?,
        trials,
        footer,
    })
}

/// Rebuilds a session log from its recorded inputs alone.
pub fn replay(log: &SessionLog, corpus: &CorpusFile) -> Result<SessionLog, SessionError> {
    let mut header = log.header.clone();
    header.started_at_ms = None;
    let mut session = Session::new(header, corpus)?;
    if let Some(t0) = log.header.started_at_ms {
        session.start_trial(t0)?;
    }
    let pending = log.footer.iter().flat_map(|f| f.pending_events.iter());
    for ev in log
        .trials
        .iter()
        .flat_map(|t| t.events.iter())
        .chain(pending)
    {
        session.feed_input(*ev)?;
    }
    // without a footer, the last trial still has to reach its closing time
    let end = log
        .footer
        .as_ref()
        .map(|f| f.ended_at_ms)
        .or_else(|| log.trials.last().map(|t| t.ended_at_ms));
    if let Some(t) = end {
        session.tick(t.max(session.now()))?;
    }
    let mut out = session.finish();
    if log.footer.is_none() {
        out.footer = None;
    }
    Ok(out)
}
