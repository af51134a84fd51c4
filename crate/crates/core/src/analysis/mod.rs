//! Accuracy and residual response time per sentence category.
//!
//! Response times of correctly parsed trials are regressed on nine nuisance
//! covariates by least squares; the internally studentized residuals are
//! then averaged per category.

mod matrix;
mod observe;
mod ols;
mod report;

pub use matrix::Matrix;
pub use observe::{
    extract_observations, ExtractOptions, ObservationRow, ResponseMeasure, COLUMN_NAMES,
};
pub use ols::{fit_ols, RegressionFit};
pub use report::{category_report, CategoryStats, CategoryTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusFile;
use crate::session::SessionLog;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("rank-deficient design: no usable column among {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("insufficient data: {n} rows for {p} columns")]
    InsufficientData { n: usize, p: usize },
    #[error("studentized residual undefined (leverage 1) at rows {rows:?}")]
    UndefinedResidual { rows: Vec<usize> },
    #[error("missing sentence metadata for `{0}`")]
    Extraction(String),
    #[error("{residuals} residuals for {rows} correct rows")]
    Misaligned { rows: usize, residuals: usize },
    #[error("group {group}: {source}")]
    Group {
        group: String,
        #[source]
        source: Box<AnalysisError>,
    },
}

/// Whether one regression is fitted over all subjects or one per subject.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Grouping {
    #[default]
    Pooled,
    PerSubject,
}

impl Grouping {
    pub fn label(self) -> &'static str {
        match self {
            Grouping::Pooled => "POOLED",
            Grouping::PerSubject => "PER_SUBJECT",
        }
    }
}

impl std::str::FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "pooled" => Ok(Grouping::Pooled),
            "per_subject" => Ok(Grouping::PerSubject),
            other => Err(format!("unknown grouping `{other}`")),
        }
    }
}

/// Builds the design matrix and response vector from rows.
pub fn design(rows: &[&ObservationRow]) -> (Matrix<f64>, Vec<f64>) {
    let x = Matrix::from_rows(&rows.iter().map(|r| r.features()).collect::<Vec<_>>());
    let y = rows.iter().map(|r| r.y).collect();
    (x, y)
}

pub fn column_names() -> Vec<String> {
    COLUMN_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFit {
    /// `None` for the pooled fit, else the subject id.
    pub subject_id: Option<String>,
    pub fit: RegressionFit<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub grouping: Grouping,
    pub rows: Vec<ObservationRow>,
    pub fits: Vec<GroupFit>,
    /// Studentized residual per correct row, in row order.
    pub residuals: Vec<f64>,
    pub table: CategoryTable,
}

impl Analysis {
    /// Report with the grouping label, dropped columns and the table.
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "grouping: {}\nrows: {} ({} correct)\n",
            self.grouping.label(),
            self.rows.len(),
            self.residuals.len()
        );
        for g in &self.fits {
            if !g.fit.dropped.is_empty() {
                let who = g.subject_id.as_deref().unwrap_or("pooled");
                out.push_str(&format!("dropped ({who}): {}\n", g.fit.dropped.join(", ")));
            }
        }
        out.push('\n');
        out.push_str(&self.table.render_text());
        out
    }
}

/// extract → fit (correct rows only) → studentize → tabulate.
pub fn analyze(
    logs: &[SessionLog],
    corpus: Option<&CorpusFile>,
    grouping: Grouping,
    opts: ExtractOptions,
) -> Result<Analysis, AnalysisError> {
    let rows = extract_observations(logs, corpus, opts)?;
    let correct: Vec<(usize, &ObservationRow)> =
        rows.iter().filter(|r| r.correct).enumerate().collect();

    let groups: Vec<(Option<String>, Vec<usize>)> = match grouping {
        Grouping::Pooled => vec![(None, (0..correct.len()).collect())],
        Grouping::PerSubject => {
            let mut order: Vec<String> = Vec::new();
            let mut members: std::collections::HashMap<&str, Vec<usize>> = Default::default();
            for &(k, r) in &correct {
                if !members.contains_key(r.subject_id.as_str()) {
                    order.push(r.subject_id.clone());
                }
                members.entry(r.subject_id.as_str()).or_default().push(k);
            }
            order
                .into_iter()
                .map(|s| {
                    let m = members.remove(s.as_str()).unwrap_or_default();
                    (Some(s), m)
                })
                .collect()
        }
    };

    let mut residuals = vec![0.0; correct.len()];
    let mut fits = Vec::new();
    for (subject_id, members) in groups {
        let wrap = |e: AnalysisError| AnalysisError::Group {
            group: subject_id.clone().unwrap_or_else(|| "pooled".into()),
            source: Box::new(e),
        };
        let group_rows: Vec<&ObservationRow> = members.iter().map(|&k| correct[k].1).collect();
        let (x, y) = design(&group_rows);
        let fit = fit_ols(&x, &column_names(), &y).map_err(wrap)?;
        let r = fit.studentized_residuals().map_err(wrap)?;
        for (&k, v) in members.iter().zip(r) {
            residuals[k] = v;
        }
        fits.push(GroupFit { subject_id, fit });
    }

    let table = category_report(&rows, &residuals)?;
    Ok(Analysis {
        grouping,
        rows,
        fits,
        residuals,
        table,
    })
}
