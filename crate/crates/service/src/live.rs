//! One live session: the engine, its input journal and its log file.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use srdp_core::corpus::CorpusFile;
use srdp_core::session::{Input, InputEvent, Phase, Session, SessionError, SessionLogWriter};

use crate::wire::{ClientEnvelope, ClientMessage, ErrorCode, ServerMessage, PROTOCOL_VERSION};

pub struct LiveSession {
    pub id: String,
    pub log_name: String,
    engine: Session,
    /// Every accepted input, in order; with the header this determines the
    /// engine state.
    journal: Vec<InputEvent>,
    log_path: PathBuf,
    writer: Option<SessionLogWriter<BufWriter<File>>>,
    written_trials: usize,
    footer_written: bool,
    /// Client time and server instant of the last hello.
    anchor: Option<(u64, Instant)>,
}

fn epoch_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn error(code: ErrorCode, message: impl Into<String>) -> ServerMessage {
    ServerMessage::Error {
        code,
        message: message.into(),
    }
}

fn engine_error(e: SessionError) -> ServerMessage {
    let code = match e {
        SessionError::Clock { .. } => ErrorCode::Clock,
        SessionError::SessionFinished => ErrorCode::SessionFinished,
        SessionError::NotStarted => ErrorCode::NotStarted,
        _ => ErrorCode::Internal,
    };
    error(code, e.to_string())
}

impl LiveSession {
    pub fn new(id: String, engine: Session, log_path: PathBuf) -> Self {
        let log_name = log_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        LiveSession {
            id,
            log_name,
            engine,
            journal: Vec::new(),
            log_path,
            writer: None,
            written_trials: 0,
            footer_written: false,
            anchor: None,
        }
    }

    pub fn engine(&self) -> &Session {
        &self.engine
    }

    pub fn journal(&self) -> &[InputEvent] {
        &self.journal
    }

    /// Handles one client frame. The returned messages end with the current
    /// view unless the frame was rejected before reaching the engine.
    pub fn handle(&mut self, env: ClientEnvelope, corpus: &CorpusFile) -> Vec<ServerMessage> {
        if env.v != PROTOCOL_VERSION {
            return vec![error(
                ErrorCode::UnsupportedVersion,
                format!("protocol version {} not supported", env.v),
            )];
        }
        let result = match env.msg {
            ClientMessage::Hello { t, .. } => {
                self.anchor = Some((t, Instant::now()));
                Ok(Vec::new())
            }
            ClientMessage::InputEvent { t, input } => self.input(t, input),
            ClientMessage::Jump { t } => self.input(t, Input::Jump),
            ClientMessage::Tick { t } => self.engine.tick(t).map_err(engine_error),
            ClientMessage::Resume { .. } => self.restore(corpus).map(|_| Vec::new()),
        };
        let mut msgs: Vec<ServerMessage> = match result {
            Ok(outs) => outs
                .iter()
                .filter_map(|o| ServerMessage::from_output(o, &self.log_name))
                .collect(),
            Err(e) => vec![e],
        };
        if let Err(e) = self.persist() {
            msgs.push(error(ErrorCode::Internal, format!("log write failed: {e}")));
        }
        msgs.push(ServerMessage::View {
            view: self.engine.view(),
        });
        msgs
    }

    fn input(
        &mut self,
        t: u64,
        input: Input,
    ) -> Result<Vec<srdp_core::session::EngineOutput>, ServerMessage> {
        if self.engine.phase() == Phase::Idle {
            if input != Input::Jump {
                return Err(error(
                    ErrorCode::NotStarted,
                    "jump to start the first trial",
                ));
            }
            return self.engine.start_trial(t).map_err(engine_error);
        }
        let ev = InputEvent {
            t,
            input,
            received_at_ms: Some(epoch_ms()),
        };
        let out = self.engine.feed_input(ev).map_err(engine_error)?;
        self.journal.push(ev);
        Ok(out)
    }

    /// Writes the header once the first trial has started, each finished
    /// trial, and the footer at the end.
    fn persist(&mut self) -> std::io::Result<()> {
        if self.engine.header().started_at_ms.is_none() {
            return Ok(());
        }
        if self.writer.is_none() {
            let file = File::create(&self.log_path)?;
            let mut w = SessionLogWriter::new(BufWriter::new(file));
            w.write_header(self.engine.header())?;
            self.writer = Some(w);
        }
        let w = self.writer.as_mut().expect("opened above");
        for t in &self.engine.finished_trials()[self.written_trials..] {
            w.write_trial(t)?;
        }
        self.written_trials = self.engine.finished_trials().len();
        if self.engine.is_done() && !self.footer_written {
            if let Some(f) = self.engine.finish().footer {
                w.write_footer(&f)?;
            }
            self.footer_written = true;
        }
        Ok(())
    }

    /// Rebuilds the engine from header and journal alone.
    pub fn rebuild(&self, corpus: &CorpusFile) -> Result<Session, SessionError> {
        let mut header = self.engine.header().clone();
        let started = header.started_at_ms.take();
        let mut s = Session::new(header, corpus)?;
        if let Some(t0) = started {
            s.start_trial(t0)?;
            for ev in &self.journal {
                s.feed_input(*ev)?;
            }
            s.tick(self.engine.now())?;
        }
        Ok(s)
    }

    /// The journal is authoritative: a live engine that disagrees with it
    /// is replaced.
    fn restore(&mut self, corpus: &CorpusFile) -> Result<(), ServerMessage> {
        let rebuilt = self.rebuild(corpus).map_err(engine_error)?;
        if rebuilt.view() != self.engine.view() {
            log::error!("session {}: live state diverged from its journal", self.id);
            self.engine = rebuilt;
        }
        Ok(())
    }

    /// Server instant at which the next deadline should be ticked, given the
    /// clock anchor from the last hello.
    pub fn next_wakeup(&self, grace: Duration) -> Option<(u64, Instant)> {
        let deadline = self.engine.next_deadline()?;
        let (t0, at) = self.anchor?;
        let ahead = Duration::from_millis(deadline.saturating_sub(t0));
        Some((deadline, at + ahead + grace))
    }

    /// Ticks to `deadline` if it is still pending.
    pub fn tick_deadline(&mut self, deadline: u64, corpus: &CorpusFile) -> Vec<ServerMessage> {
        if self.engine.next_deadline() != Some(deadline) || self.engine.now() >= deadline {
            return Vec::new();
        }
        self.handle(
            ClientEnvelope {
                v: PROTOCOL_VERSION,
                seq: 0,
                msg: ClientMessage::Tick { t: deadline },
            },
            corpus,
        )
    }
}
