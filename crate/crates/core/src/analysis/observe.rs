use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::corpus::CorpusFile;
use crate::session::{Block, SessionLog, TrialLog};
use crate::transition::SentenceType;

/// Names of the regression columns, intercept first.
pub const COLUMN_NAMES: [&str; 10] = [
    "intercept",
    "morae",
    "chars",
    "phrases",
    "order",
    "n_default_shift",
    "n_default_reduce",
    "n_shift",
    "n_reduce",
    "alternations",
];

/// How the per-trial response time `y` is derived.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMeasure {
    /// Sum of judged-action response times.
    #[default]
    JudgedSum,
    /// Trial wall-clock duration minus the fixed animations.
    WallClock,
}

impl std::str::FromStr for ResponseMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "judged" | "judged_sum" => Ok(ResponseMeasure::JudgedSum),
            "wall" | "wall_clock" => Ok(ResponseMeasure::WallClock),
            other => Err(format!("unknown response measure `{other}`")),
        }
    }
}

/// One trial flattened to regression inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub subject_id: String,
    pub sentence_id: String,
    pub category: SentenceType,
    pub correct: bool,
    /// Seconds.
    pub y: f64,
    pub morae: u32,
    pub chars: u32,
    pub phrases: usize,
    pub order: usize,
    pub n_default_shift: u32,
    pub n_default_reduce: u32,
    pub n_shift: u32,
    pub n_reduce: u32,
    pub alternations: u32,
}

impl ObservationRow {
    /// Design row matching [`COLUMN_NAMES`].
    pub fn features(&self) -> [f64; 10] {
        [
            1.0,
            self.morae as f64,
            self.chars as f64,
            self.phrases as f64,
            self.order as f64,
            self.n_default_shift as f64,
            self.n_default_reduce as f64,
            self.n_shift as f64,
            self.n_reduce as f64,
            self.alternations as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    pub measure: ResponseMeasure,
    pub include_practice: bool,
}

/// Flattens trials of complete logs into observation rows.
///
/// Incomplete logs are skipped with a warning, practice trials unless
/// requested. With a corpus, every sentence must be present in it and its
/// metadata replaces the values copied into the log.
pub fn extract_observations(
    logs: &[SessionLog],
    corpus: Option<&CorpusFile>,
    opts: ExtractOptions,
) -> Result<Vec<ObservationRow>, AnalysisError> {
    let mut rows = Vec::new();
    for log in logs {
        let subject = &log.header.plan.subject_id;
        if !log.is_complete() {
            log::warn!("skipping incomplete session of subject {subject}");
            continue;
        }
        let animation_ms = log.header.config.animation_ms;
        for t in &log.trials {
            if t.block == Block::Practice && !opts.include_practice {
                continue;
            }
            rows.push(row(subject, t, corpus, opts.measure, animation_ms)?);
        }
    }
    Ok(rows)
}

fn row(
    subject: &str,
    t: &TrialLog,
    corpus: Option<&CorpusFile>,
    measure: ResponseMeasure,
    animation_ms: u64,
) -> Result<ObservationRow, AnalysisError> {
    let (morae, chars, phrases) = match corpus {
        Some(c) => {
            let rec = c
                .get(&t.sentence_id)
                .ok_or_else(|| AnalysisError::Extraction(t.sentence_id.clone()))?;
            let s = &rec.sentence;
            (s.total_morae(), s.total_chars(), s.phrases.len())
        }
        None => (t.morae, t.chars, t.phrases),
    };
    let counts = t.counts();
    let ms = match measure {
        ResponseMeasure::JudgedSum => t.judged_response_ms(),
        ResponseMeasure::WallClock => {
            (t.ended_at_ms - t.started_at_ms).saturating_sub(animation_ms * t.actions.len() as u64)
        }
    };
    Ok(ObservationRow {
        subject_id: subject.to_string(),
        sentence_id: t.sentence_id.clone(),
        category: t.category,
        correct: t.verdict.is_ok(),
        y: ms as f64 / 1000.0,
        morae,
        chars,
        phrases,
        order: t.order,
        n_default_shift: counts.default_shift,
        n_default_reduce: counts.default_reduce,
        n_shift: counts.shift,
        n_reduce: counts.reduce,
        alternations: t.direction_alternations,
    })
}
