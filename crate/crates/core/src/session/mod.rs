//! Experiment sessions: plans, the real-time game engine, logs and bots.
//!
//! The engine is clock-free. Every input carries a caller timestamp in
//! milliseconds and [`Session::tick`] advances time explicitly. Icon motion is
//! evaluated in closed form on an integer grid, so the state reached at a
//! given time does not depend on how often the caller ticks. A session is
//! therefore fully determined by its header and its input events, which is
//! what [`replay`] relies on.

mod bot;
mod engine;
mod log;
mod plan;

pub use bot::{run_bot_session, BotPolicy, TimingModel};
pub use engine::{EngineOutput, EngineView, IconView, Phase, Session, ViewPhrase, POSITION_SCALE};
pub use log::{
    parse_session_log, replay, LoggedAction, SessionFooter, SessionHeader, SessionLog,
    SessionLogWriter, SessionStatus, TrialLog, Verdict, LOG_SCHEMA_VERSION,
};
pub use plan::{
    build_plan, build_plan_with, build_practice_plan, Block, PlanCounts, PlanEntry, SessionPlan,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transition::{SentenceType, TransitionError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("insufficient corpus: need {needed} {category} sentences, found {available}")]
    InsufficientCorpus {
        category: SentenceType,
        needed: usize,
        available: usize,
    },
    #[error("plan references unknown sentence `{0}`")]
    UnknownSentence(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("a trial is already active")]
    TrialAlreadyActive,
    #[error("session is finished")]
    SessionFinished,
    #[error("no trial has been started")]
    NotStarted,
    #[error("clock error: timestamp {got} ms is before engine time {now} ms")]
    Clock { got: u64, now: u64 },
    #[error("log line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a held direction turns into a judgment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitMode {
    /// The icon travels while a direction is held and commits at a wall.
    #[default]
    Analog,
    /// Any LEFT/RIGHT press commits at once.
    Instant,
}

/// Engine parameters. Speeds are in position units per second, the icon
/// spans −1 (SHIFT wall) to +1 (REDUCE wall).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub icon_speed: f64,
    pub drift_speed: f64,
    pub animation_ms: u64,
    pub commit_mode: CommitMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            icon_speed: 2.0,
            drift_speed: 1.0,
            animation_ms: 840,
            commit_mode: CommitMode::Analog,
        }
    }
}

impl EngineConfig {
    pub const ANIMATION_RANGE_MS: std::ops::RangeInclusive<u64> = 820..=860;

    pub fn validate(&self) -> Result<(), SessionError> {
        if !Self::ANIMATION_RANGE_MS.contains(&self.animation_ms) {
            return Err(SessionError::Config(format!(
                "animation_ms = {} outside [820, 860]",
                self.animation_ms
            )));
        }
        if !(self.icon_speed.is_finite() && self.icon_speed >= 0.001) {
            return Err(SessionError::Config(format!(
                "icon_speed = {} must be at least 0.001",
                self.icon_speed
            )));
        }
        if !(self.drift_speed.is_finite() && self.drift_speed >= 0.0) {
            return Err(SessionError::Config(format!(
                "drift_speed = {} must be non-negative",
                self.drift_speed
            )));
        }
        Ok(())
    }
}

/// Raw input from any device, already mapped to three directions plus jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Input {
    Left,
    Neutral,
    Right,
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    Left,
    Neutral,
    Right,
}

impl Input {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Input::Left => Some(Direction::Left),
            Input::Neutral => Some(Direction::Neutral),
            Input::Right => Some(Direction::Right),
            Input::Jump => None,
        }
    }
}

impl From<Direction> for Input {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Left => Input::Left,
            Direction::Neutral => Input::Neutral,
            Direction::Right => Input::Right,
        }
    }
}

/// A timestamped input. `t` is the client's monotonic clock in ms;
/// `received_at_ms` is the server receipt time, kept for auditing only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEvent {
    pub t: u64,
    pub input: Input,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub received_at_ms: Option<u64>,
}

impl InputEvent {
    pub fn new(t: u64, input: Input) -> Self {
        InputEvent {
            t,
            input,
            received_at_ms: None,
        }
    }
}
