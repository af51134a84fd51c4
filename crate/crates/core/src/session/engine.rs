use serde::{Deserialize, Serialize};

use super::{
    Block, CommitMode, Direction, EngineConfig, Input, InputEvent, LoggedAction, SessionError,
    SessionFooter, SessionHeader, SessionLog, SessionStatus, TrialLog, Verdict,
};
use crate::corpus::{CorpusFile, SentenceRecord};
use crate::transition::{is_correct, ActionKind, Arc, Judgment, ParserState, Pending};

/// Icon position units per unit of screen position; a wall sits at
/// `±POSITION_SCALE`.
pub const POSITION_SCALE: i64 = 1_000_000;

/// Externally visible engine phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    /// No trial started yet.
    Idle,
    AwaitJudgment {
        since: u64,
    },
    Animating {
        until: u64,
    },
    TrialDone {
        at: u64,
    },
    SessionDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrialPhase {
    Await { since: u64 },
    Animating { start: u64, until: u64, from: i64 },
    Done { at: u64 },
}

#[derive(Debug, Clone)]
struct Trial {
    order: usize,
    state: ParserState,
    phase: TrialPhase,
    position: i64,
    actions: Vec<LoggedAction>,
    alternations: u32,
    last_side: Option<Direction>,
    events: Vec<InputEvent>,
    started_at: u64,
}

/// Messages produced while the engine runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EngineOutput {
    TrialStarted {
        order: usize,
        sentence_id: String,
        at: u64,
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
    AwaitingJudgment {
        s: usize,
        q: usize,
        since: u64,
    },
    /// End-of-trial verdict. Deliberately carries no per-arc detail.
    Verdict {
        order: usize,
        verdict: Verdict,
        at: u64,
    },
    TrialFinished {
        log: TrialLog,
    },
    SessionDone {
        at: u64,
    },
    Ignored {
        input: Input,
        at: u64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewPhrase {
    pub index: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IconView {
    /// −1 at the SHIFT wall, +1 at the REDUCE wall.
    pub position: f64,
    pub direction: Direction,
}

/// Everything a client needs to draw the screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineView {
    pub now: u64,
    pub phase: Phase,
    pub order: usize,
    pub total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<String>,
    pub phrases: Vec<ViewPhrase>,
    pub stack: Vec<usize>,
    pub queue: Vec<usize>,
    pub arcs: Vec<Arc>,
    pub icon: IconView,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

/// One subject's session: a sequential state machine over timestamped
/// inputs.
#[derive(Debug, Clone)]
pub struct Session {
    header: SessionHeader,
    records: Vec<SentenceRecord>,
    speed: i64,
    drift: i64,
    clock: u64,
    held: Direction,
    trial: Option<Trial>,
    finished_trials: Vec<TrialLog>,
    carried: Vec<InputEvent>,
    done: bool,
}

fn per_ms(speed: f64) -> i64 {
    (speed * POSITION_SCALE as f64 / 1000.0).round() as i64
}

fn div_ceil(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

impl Session {
    /// Resolves the plan against the corpus; no trial is started yet.
    pub fn new(header: SessionHeader, corpus: &CorpusFile) -> Result<Self, SessionError> {
        header.config.validate()?;
        let index = corpus.index();
        let records = header
            .plan
            .entries
            .iter()
            .map(|e| {
                index
                    .get(e.sentence_id.as_str())
                    .map(|r| (*r).clone())
                    .ok_or_else(|| SessionError::UnknownSentence(e.sentence_id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for r in &records {
            r.sentence.check()?;
        }
        let mut speed = per_ms(header.config.icon_speed);
        if speed == 0 {
            speed = 1;
        }
        Ok(Session {
            speed,
            drift: per_ms(header.config.drift_speed),
            header,
            records,
            clock: 0,
            held: Direction::Neutral,
            trial: None,
            finished_trials: Vec::new(),
            carried: Vec::new(),
            done: false,
        })
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    pub fn config(&self) -> &EngineConfig {
        &self.header.config
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    pub fn held(&self) -> Direction {
        self.held
    }

    pub fn finished_trials(&self) -> &[TrialLog] {
        &self.finished_trials
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn phase(&self) -> Phase {
        if self.done {
            return Phase::SessionDone;
        }
        match &self.trial {
            None => Phase::Idle,
            Some(t) => match t.phase {
                TrialPhase::Await { since } => Phase::AwaitJudgment { since },
                TrialPhase::Animating { until, .. } => Phase::Animating { until },
                TrialPhase::Done { at } => Phase::TrialDone { at },
            },
        }
    }

    /// Parser state of the current trial.
    pub fn parser_state(&self) -> Option<&ParserState> {
        self.trial.as_ref().map(|t| &t.state)
    }

    /// Sentence and gold tree of the current trial.
    pub fn current_record(&self) -> Option<&SentenceRecord> {
        self.trial.as_ref().map(|t| &self.records[t.order - 1])
    }

    /// Starts the first trial, or the next one once the current trial is
    /// done. The latter is recorded as a JUMP so that replays see it.
    pub fn start_trial(&mut self, now: u64) -> Result<Vec<EngineOutput>, SessionError> {
        if self.done {
            return Err(SessionError::SessionFinished);
        }
        match self.phase() {
            Phase::Idle => {
                self.check_clock(now)?;
                self.clock = now;
                self.header.started_at_ms = Some(now);
                let mut out = Vec::new();
                self.begin_trial(1, now, &mut out)?;
                Ok(out)
            }
            Phase::TrialDone { .. } => self.feed_input(InputEvent::new(now, Input::Jump)),
            _ => Err(SessionError::TrialAlreadyActive),
        }
    }

    /// Advances engine time to `now`, firing commits and animation ends.
    pub fn tick(&mut self, now: u64) -> Result<Vec<EngineOutput>, SessionError> {
        let mut out = Vec::new();
        if now <= self.clock {
            return Ok(out);
        }
        self.advance(now, &mut out)?;
        Ok(out)
    }

    /// Next time at which something happens without further input.
    pub fn next_deadline(&self) -> Option<u64> {
        let trial = self.trial.as_ref()?;
        match trial.phase {
            TrialPhase::Animating { until, .. } => Some(until),
            TrialPhase::Await { .. } => self.commit_time(trial),
            TrialPhase::Done { .. } => None,
        }
    }

    pub fn feed_input(&mut self, ev: InputEvent) -> Result<Vec<EngineOutput>, SessionError> {
        if self.done {
            return Err(SessionError::SessionFinished);
        }
        if self.trial.is_none() {
            return Err(SessionError::NotStarted);
        }
        self.check_clock(ev.t)?;
        let mut out = Vec::new();
        self.advance(ev.t, &mut out)?;

        let trial = self.trial.as_mut().expect("checked above");
        let trial_open = !matches!(trial.phase, TrialPhase::Done { .. });
        if trial_open {
            trial.events.push(ev);
        } else {
            self.carried.push(ev);
        }

        match ev.input.direction() {
            None => {
                if trial_open {
                    out.push(EngineOutput::Ignored {
                        input: ev.input,
                        at: ev.t,
                        reason: "jump only advances after the verdict".into(),
                    });
                } else {
                    let next = trial.order + 1;
                    self.begin_trial(next, ev.t, &mut out)?;
                }
            }
            Some(dir) => {
                if trial_open {
                    if dir != Direction::Neutral {
                        if trial.last_side.is_some_and(|s| s != dir) {
                            trial.alternations += 1;
                        }
                        trial.last_side = Some(dir);
                    }
                    if let TrialPhase::Animating { .. } = trial.phase {
                        out.push(EngineOutput::Ignored {
                            input: ev.input,
                            at: ev.t,
                            reason: "animation in progress".into(),
                        });
                    }
                }
                self.held = dir;
                let instant = self.header.config.commit_mode == CommitMode::Instant;
                if instant && dir != Direction::Neutral {
                    if let Some(TrialPhase::Await { .. }) = self.trial.as_ref().map(|t| t.phase) {
                        self.commit(ev.t, dir, &mut out)?;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn view(&self) -> EngineView {
        let total = self.records.len();
        let icon = |position: f64| IconView {
            position,
            direction: self.held,
        };
        let Some(trial) = &self.trial else {
            return EngineView {
                now: self.clock,
                phase: self.phase(),
                order: 0,
                total,
                sentence_id: None,
                phrases: Vec::new(),
                stack: Vec::new(),
                queue: Vec::new(),
                arcs: Vec::new(),
                icon: icon(0.0),
                verdict: None,
            };
        };
        let record = &self.records[trial.order - 1];
        let position = match trial.phase {
            TrialPhase::Await { .. } => trial.position,
            TrialPhase::Animating { start, until, from } => {
                let left = until.saturating_sub(self.clock) as i128;
                let span = (until - start).max(1) as i128;
                (from as i128 * left / span) as i64
            }
            TrialPhase::Done { .. } => 0,
        };
        let verdict = match trial.phase {
            TrialPhase::Done { .. } => self.finished_trials.last().map(|t| t.verdict),
            _ => None,
        };
        EngineView {
            now: self.clock,
            phase: self.phase(),
            order: trial.order,
            total,
            sentence_id: Some(record.id().to_string()),
            phrases: record
                .sentence
                .phrases
                .iter()
                .map(|p| ViewPhrase {
                    index: p.index,
                    surface: p.surface.clone(),
                })
                .collect(),
            stack: trial.state.stack().to_vec(),
            queue: trial.state.queue().collect(),
            arcs: trial.state.arcs().to_vec(),
            icon: icon(position as f64 / POSITION_SCALE as f64),
            verdict,
        }
    }

    /// Closes the session into a log. Unfinished sessions are marked
    /// aborted and keep their outstanding inputs in the footer.
    pub fn finish(&self) -> SessionLog {
        let mut pending = Vec::new();
        if let Some(t) = &self.trial {
            if !matches!(t.phase, TrialPhase::Done { .. }) {
                pending.extend_from_slice(&t.events);
            }
        }
        pending.extend_from_slice(&self.carried);
        SessionLog {
            header: self.header.clone(),
            trials: self.finished_trials.clone(),
            footer: Some(SessionFooter {
                status: if self.done {
                    SessionStatus::Complete
                } else {
                    SessionStatus::Aborted
                },
                ended_at_ms: self.clock,
                pending_events: pending,
            }),
        }
    }

    fn check_clock(&self, t: u64) -> Result<(), SessionError> {
        if t < self.clock {
            Err(SessionError::Clock {
                got: t,
                now: self.clock,
            })
        } else {
            Ok(())
        }
    }

    /// Earliest integer millisecond at which the held direction reaches a
    /// wall, under analog commits.
    fn commit_time(&self, trial: &Trial) -> Option<u64> {
        if self.header.config.commit_mode == CommitMode::Instant {
            return None;
        }
        let remaining = match self.held {
            Direction::Right => POSITION_SCALE - trial.position,
            Direction::Left => POSITION_SCALE + trial.position,
            Direction::Neutral => return None,
        };
        Some(self.clock + div_ceil(remaining.max(0), self.speed) as u64)
    }

    fn integrate(&mut self, to: u64) {
        let dt = to.saturating_sub(self.clock) as i64;
        let (speed, drift, held) = (self.speed, self.drift, self.held);
        if let Some(trial) = self.trial.as_mut() {
            if let TrialPhase::Await { .. } = trial.phase {
                let p = trial.position;
                trial.position = match held {
                    Direction::Right => (p + speed * dt).min(POSITION_SCALE),
                    Direction::Left => (p - speed * dt).max(-POSITION_SCALE),
                    Direction::Neutral => {
                        let step = drift.saturating_mul(dt);
                        if p > 0 {
                            (p - step).max(0)
                        } else {
                            (p + step).min(0)
                        }
                    }
                };
            }
        }
        self.clock = self.clock.max(to);
    }

    fn advance(&mut self, to: u64, out: &mut Vec<EngineOutput>) -> Result<(), SessionError> {
        while let Some(trial) = self.trial.as_ref() {
            match trial.phase {
                TrialPhase::Await { .. } => match self.commit_time(trial) {
                    Some(tc) if tc <= to => {
                        self.integrate(tc);
                        let side = self.held;
                        self.commit(tc, side, out)?;
                    }
                    _ => break,
                },
                TrialPhase::Animating { until, .. } if until <= to => {
                    self.clock = self.clock.max(until);
                    self.after_animation(until, out)?;
                }
                _ => break,
            }
        }
        self.integrate(to);
        Ok(())
    }

    fn begin_trial(
        &mut self,
        order: usize,
        t: u64,
        out: &mut Vec<EngineOutput>,
    ) -> Result<(), SessionError> {
        let record = &self.records[order - 1];
        let state = ParserState::new(record.sentence.len())?;
        out.push(EngineOutput::TrialStarted {
            order,
            sentence_id: record.id().to_string(),
            at: t,
        });
        self.trial = Some(Trial {
            order,
            state,
            phase: TrialPhase::Done { at: t },
            position: 0,
            actions: Vec::new(),
            alternations: 0,
            last_side: None,
            events: std::mem::take(&mut self.carried),
            started_at: t,
        });
        self.after_animation(t, out)
    }

    /// Resolves whatever the parser needs at time `t` once the icon is back
    /// in the centre.
    fn after_animation(&mut self, t: u64, out: &mut Vec<EngineOutput>) -> Result<(), SessionError> {
        let anim = self.header.config.animation_ms;
        let trial = self.trial.as_mut().expect("active trial");
        trial.position = 0;
        match trial.state.pending_action() {
            Pending::Automatic { .. } => {
                let before = trial.state.clone();
                let kind = trial.state.step_automatic()?;
                let action = LoggedAction {
                    kind,
                    s: before.stack_top(),
                    q: before.queue_front(),
                    committed_at_ms: t,
                    response_ms: None,
                };
                trial.actions.push(action);
                trial.phase = TrialPhase::Animating {
                    start: t,
                    until: t + anim,
                    from: 0,
                };
                out.push(EngineOutput::ActionCommitted {
                    kind,
                    s: action.s,
                    q: action.q,
                    at: t,
                    response_ms: None,
                });
                out.push(EngineOutput::Animating { until: t + anim });
            }
            Pending::Judged { s, q } => {
                trial.phase = TrialPhase::Await { since: t };
                out.push(EngineOutput::AwaitingJudgment { s, q, since: t });
            }
            Pending::Terminal => self.close_trial(t, out)?,
        }
        Ok(())
    }

    fn commit(
        &mut self,
        t: u64,
        side: Direction,
        out: &mut Vec<EngineOutput>,
    ) -> Result<(), SessionError> {
        let anim = self.header.config.animation_ms;
        let trial = self.trial.as_mut().expect("active trial");
        let TrialPhase::Await { since } = trial.phase else {
            unreachable!("commit outside judgment window");
        };
        let (judgment, wall) = match side {
            Direction::Right => (Judgment::Reduce, POSITION_SCALE),
            Direction::Left => (Judgment::Shift, -POSITION_SCALE),
            Direction::Neutral => unreachable!("neutral never commits"),
        };
        let s = trial.state.stack_top();
        let q = trial.state.queue_front();
        let kind = trial.state.step_judgment(judgment)?;
        let response_ms = Some(t - since);
        trial.actions.push(LoggedAction {
            kind,
            s,
            q,
            committed_at_ms: t,
            response_ms,
        });
        trial.position = wall;
        trial.phase = TrialPhase::Animating {
            start: t,
            until: t + anim,
            from: wall,
        };
        out.push(EngineOutput::ActionCommitted {
            kind,
            s,
            q,
            at: t,
            response_ms,
        });
        out.push(EngineOutput::Animating { until: t + anim });
        Ok(())
    }

    fn close_trial(&mut self, t: u64, out: &mut Vec<EngineOutput>) -> Result<(), SessionError> {
        let trial = self.trial.as_mut().expect("active trial");
        let record = &self.records[trial.order - 1];
        let verdict = if is_correct(trial.state.arcs(), &record.heads)? {
            Verdict::Ok
        } else {
            Verdict::Ng
        };
        trial.phase = TrialPhase::Done { at: t };
        let block = self
            .header
            .plan
            .entries
            .get(trial.order - 1)
            .map(|e| e.block)
            .unwrap_or(Block::Block2);
        let log = TrialLog {
            sentence_id: record.id().to_string(),
            order: trial.order,
            block,
            category: record.sentence_type(),
            phrases: record.sentence.len(),
            morae: record.sentence.total_morae(),
            chars: record.sentence.total_chars(),
            started_at_ms: trial.started_at,
            ended_at_ms: t,
            actions: std::mem::take(&mut trial.actions),
            direction_alternations: trial.alternations,
            verdict,
            arcs: trial.state.arcs().to_vec(),
            events: std::mem::take(&mut trial.events),
        };
        out.push(EngineOutput::Verdict {
            order: trial.order,
            verdict,
            at: t,
        });
        let last = trial.order == self.records.len();
        self.finished_trials.push(log.clone());
        out.push(EngineOutput::TrialFinished { log });
        if last {
            self.done = true;
            out.push(EngineOutput::SessionDone { at: t });
        }
        Ok(())
    }
}
