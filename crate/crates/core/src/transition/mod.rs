//! The shift-reduce-like transition system for head-final bunsetsu
//! dependency parsing.
//!
//! A parse is a sequence of states `⟨stack, queue, arcs⟩`. Two actions are
//! forced ("default shift" when the stack is empty, "default reduce" when a
//! single phrase is left in the queue); at every other state a judge picks
//! SHIFT (not attached) or REDUCE (stack top depends on queue front).
//!
//! Every run over `N` phrases takes exactly `2(N-1)` actions: each phrase
//! but the last is shifted exactly once and attached exactly once. This is
//! sometimes quoted as "at most 2N", which is a looser bound.

mod state;
mod tree;

pub use state::{
    init_state, is_correct, oracle_judgment, run_with_policy, ActionCounts, ActionKind,
    ActionRecord, Judgment, ParseResult, ParserState, Pending,
};
pub use tree::{enumerate_trees, validate_tree, GoldTree, ValidityReport, Violation, ROOT};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the transition system.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("degenerate input: sentence has {0} phrase(s), at least 2 are required")]
    DegenerateInput(usize),
    #[error("invalid state: expected {expected} position, found {found}")]
    InvalidState {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),
    #[error("invalid sentence: {0}")]
    InvalidSentence(String),
}

/// Case marker attached to a bunsetsu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CaseMarker {
    /// が
    Nom,
    /// を
    Acc,
    /// に
    Dat,
    Other,
}

/// One base phrase (bunsetsu) of a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading: Option<String>,
    #[serde(rename = "chars")]
    pub char_count: u32,
    #[serde(rename = "morae")]
    pub mora_count: u32,
    #[serde(rename = "marker", default, skip_serializing_if = "Option::is_none")]
    pub case_marker: Option<CaseMarker>,
}

/// Sentence category. Garden-path types are named after the 5th phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SentenceType {
    Filler,
    Ctrl,
    Eb,
    Lb,
}

impl SentenceType {
    pub const ALL: [SentenceType; 4] = [
        SentenceType::Filler,
        SentenceType::Ctrl,
        SentenceType::Eb,
        SentenceType::Lb,
    ];

    pub fn is_garden_path(self) -> bool {
        !matches!(self, SentenceType::Filler)
    }

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            SentenceType::Filler => "Filler",
            SentenceType::Ctrl => "CTRL",
            SentenceType::Eb => "EB",
            SentenceType::Lb => "LB",
        }
    }
}

impl std::fmt::Display for SentenceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SentenceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FILLER" => Ok(SentenceType::Filler),
            "CTRL" => Ok(SentenceType::Ctrl),
            "EB" => Ok(SentenceType::Eb),
            "LB" => Ok(SentenceType::Lb),
            other => Err(format!("unknown sentence type `{other}`")),
        }
    }
}

/// A pre-segmented sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    #[serde(rename = "type")]
    pub type_tag: SentenceType,
    pub phrases: Vec<Phrase>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Checks the phrase invariants: N ≥ 2, contiguous 1-based indices and
    /// positive lengths.
    pub fn check(&self) -> Result<(), TransitionError> {
        if self.phrases.len() < 2 {
            return Err(TransitionError::DegenerateInput(self.phrases.len()));
        }
        for (i, p) in self.phrases.iter().enumerate() {
            if p.index != i + 1 {
                return Err(TransitionError::InvalidSentence(format!(
                    "phrase at position {} has index {}",
                    i + 1,
                    p.index
                )));
            }
            if p.char_count == 0 || p.mora_count == 0 {
                return Err(TransitionError::InvalidSentence(format!(
                    "phrase {} has a zero length count",
                    p.index
                )));
            }
        }
        Ok(())
    }

    pub fn total_morae(&self) -> u32 {
        self.phrases.iter().map(|p| p.mora_count).sum()
    }

    pub fn total_chars(&self) -> u32 {
        self.phrases.iter().map(|p| p.char_count).sum()
    }

    /// Surface text with phrases separated by single spaces.
    pub fn text(&self) -> String {
        self.phrases
            .iter()
            .map(|p| p.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A dependency arc, stored dependent → head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub dependent: usize,
    pub head: usize,
}

impl Arc {
    pub fn new(dependent: usize, head: usize) -> Self {
        debug_assert!(dependent < head, "arcs are head-final");
        Arc { dependent, head }
    }
}
