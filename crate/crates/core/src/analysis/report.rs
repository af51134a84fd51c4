use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::observe::ObservationRow;
use super::AnalysisError;
use crate::transition::SentenceType;

/// Summary of one sentence category. `None` marks an undefined statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: SentenceType,
    pub trials: usize,
    pub correct: usize,
    /// Percent correct over all trials of the category.
    pub accuracy_mean: Option<f64>,
    /// Sample standard deviation of per-subject accuracies.
    pub accuracy_sd: Option<f64>,
    pub srrt_mean: Option<f64>,
    /// Sample standard deviation over correct trials.
    pub srrt_sd: Option<f64>,
}

impl CategoryStats {
    pub fn absent(category: SentenceType) -> Self {
        CategoryStats {
            category,
            trials: 0,
            correct: 0,
            accuracy_mean: None,
            accuracy_sd: None,
            srrt_mean: None,
            srrt_sd: None,
        }
    }
}

/// Accuracy and residual response time per category, in the fixed column
/// order Filler, CTRL, EB, LB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub categories: Vec<CategoryStats>,
}

/// Builds the table. `residuals` holds one studentized residual per correct
/// row, in row order.
pub fn category_report(
    rows: &[ObservationRow],
    residuals: &[f64],
) -> Result<CategoryTable, AnalysisError> {
    let n_correct = rows.iter().filter(|r| r.correct).count();
    if residuals.len() != n_correct {
        return Err(AnalysisError::Misaligned {
            rows: n_correct,
            residuals: residuals.len(),
        });
    }
    let mut srrt: BTreeMap<SentenceType, Vec<f64>> = BTreeMap::new();
    for (r, &e) in rows.iter().filter(|r| r.correct).zip(residuals) {
        srrt.entry(r.category).or_default().push(e);
    }

    let categories = SentenceType::ALL
        .iter()
        .map(|&cat| {
            let of_cat: Vec<&ObservationRow> = rows.iter().filter(|r| r.category == cat).collect();
            if of_cat.is_empty() {
                return CategoryStats::absent(cat);
            }
            let correct = of_cat.iter().filter(|r| r.correct).count();
            let mut per_subject: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
            for r in &of_cat {
                let e = per_subject.entry(r.subject_id.as_str()).or_default();
                e.0 += r.correct as usize;
                e.1 += 1;
            }
            let subject_acc: Vec<f64> = per_subject
                .values()
                .map(|&(c, n)| 100.0 * c as f64 / n as f64)
                .collect();
            let res = srrt.get(&cat).map(Vec::as_slice).unwrap_or(&[]);
            CategoryStats {
                category: cat,
                trials: of_cat.len(),
                correct,
                accuracy_mean: Some(100.0 * correct as f64 / of_cat.len() as f64),
                accuracy_sd: sample_sd(&subject_acc),
                srrt_mean: mean(res),
                srrt_sd: sample_sd(res),
            }
        })
        .collect();
    Ok(CategoryTable { categories })
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

fn cell(v: Option<f64>, decimals: usize) -> String {
    match v {
        // avoid printing "-0" for tiny negatives
        Some(x) => {
            let s = format!("{x:.decimals$}");
            if s.trim_start_matches('-')
                .chars()
                .all(|c| c == '0' || c == '.')
            {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        None => "-".to_string(),
    }
}

impl CategoryTable {
    pub fn get(&self, category: SentenceType) -> Option<&CategoryStats> {
        self.categories.iter().find(|c| c.category == category)
    }

    fn body(&self) -> [(&'static str, &'static str, Vec<String>); 4] {
        let col = |f: &dyn Fn(&CategoryStats) -> String| self.categories.iter().map(f).collect();
        [
            ("acc. (%)", "ave.", col(&|c| cell(c.accuracy_mean, 0))),
            ("", "stdev.", col(&|c| cell(c.accuracy_sd, 1))),
            ("s.r.r.t.", "ave.", col(&|c| cell(c.srrt_mean, 2))),
            ("", "stdev.", col(&|c| cell(c.srrt_sd, 2))),
        ]
    }

    /// Fixed-width text layout.
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<18}", "");
        for c in &self.categories {
            let _ = write!(out, "{:>8}", c.category.label());
        }
        out.push('\n');
        for (metric, stat, cells) in self.body() {
            let _ = write!(out, "{metric:<10}{stat:<8}");
            for v in cells {
                let _ = write!(out, "{v:>8}");
            }
            out.push('\n');
        }
        out
    }

    /// Tab-separated layout with the same rows and columns.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("metric\tstat");
        for c in &self.categories {
            let _ = write!(out, "\t{}", c.category.label());
        }
        out.push('\n');
        let mut last = "";
        for (metric, stat, cells) in self.body() {
            if !metric.is_empty() {
                last = metric;
            }
            let _ = write!(out, "{last}\t{stat}");
            for v in cells {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }
}
