use serde::{Deserialize, Serialize};

use super::Arc;

/// Head sentinel for the last phrase.
pub const ROOT: usize = 0;

/// Gold dependency structure as a head array.
///
/// `heads[i - 1]` is the head of phrase `i`; the last phrase carries [`ROOT`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldTree {
    pub heads: Vec<usize>,
}

impl GoldTree {
    pub fn new(heads: Vec<usize>) -> Self {
        GoldTree { heads }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of the 1-based phrase `index`.
    pub fn head_of(&self, index: usize) -> Option<usize> {
        self.heads.get(index.checked_sub(1)?).copied()
    }

    /// Non-root arcs, sorted by dependent.
    pub fn arcs(&self) -> Vec<Arc> {
        self.heads
            .iter()
            .enumerate()
            .filter(|(_, &h)| h != ROOT)
            .map(|(i, &h)| Arc {
                dependent: i + 1,
                head: h,
            })
            .collect()
    }

    /// Rebuilds a head array from an arc set over `n` phrases. Phrases without
    /// an incoming arc get [`ROOT`].
    pub fn from_arcs<'a>(arcs: impl IntoIterator<Item = &'a Arc>, n: usize) -> Self {
        let mut heads = vec![ROOT; n];
        for arc in arcs {
            if (1..=n).contains(&arc.dependent) {
                heads[arc.dependent - 1] = arc.head;
            }
        }
        GoldTree { heads }
    }
}

/// One failed tree check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Violation {
    Length { expected: usize, found: usize },
    HeadOutOfRange { phrase: usize, head: usize },
    NotHeadFinal { phrase: usize, head: usize },
    RootNotLast { phrase: usize },
    MissingRoot,
    Crossing { first: Arc, second: Arc },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Length { expected, found } => {
                write!(f, "head array has length {found}, expected {expected}")
            }
            Violation::HeadOutOfRange { phrase, head } => {
                write!(f, "phrase {phrase}: head {head} out of range")
            }
            Violation::NotHeadFinal { phrase, head } => {
                write!(f, "head-final violation at phrase {phrase} (head {head})")
            }
            Violation::RootNotLast { phrase } => {
                write!(
                    f,
                    "root at phrase {phrase}, only the last phrase may be root"
                )
            }
            Violation::MissingRoot => f.write_str("last phrase is not the root"),
            Violation::Crossing { first, second } => write!(
                f,
                "projectivity violation: arcs {}-{} and {}-{} cross",
                first.dependent, first.head, second.dependent, second.head
            ),
        }
    }
}

/// Result of [`validate_tree`]; collects every violation found.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn head_final_ok(&self) -> bool {
        !self.violations.iter().any(|v| {
            matches!(
                v,
                Violation::NotHeadFinal { .. } | Violation::HeadOutOfRange { .. }
            )
        })
    }

    pub fn single_root_ok(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RootNotLast { .. } | Violation::MissingRoot))
    }

    pub fn projective_ok(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Crossing { .. }))
    }
}

/// Checks head-finality, a single root at the last phrase and projectivity.
pub fn validate_tree(tree: &GoldTree, n: usize) -> ValidityReport {
    let mut report = ValidityReport::default();
    if tree.len() != n {
        report.violations.push(Violation::Length {
            expected: n,
            found: tree.len(),
        });
        return report;
    }

    for (i, &head) in tree.heads.iter().enumerate() {
        let phrase = i + 1;
        if head == ROOT {
            if phrase != n {
                report.violations.push(Violation::RootNotLast { phrase });
            }
            continue;
        }
        if phrase == n {
            report.violations.push(Violation::MissingRoot);
        }
        if head > n {
            report
                .violations
                .push(Violation::HeadOutOfRange { phrase, head });
        } else if head <= phrase {
            report
                .violations
                .push(Violation::NotHeadFinal { phrase, head });
        }
    }

    let arcs: Vec<Arc> = tree
        .heads
        .iter()
        .enumerate()
        .filter(|(_, &h)| h != ROOT && h <= n)
        .map(|(i, &h)| Arc {
            dependent: i + 1,
            head: h,
        })
        .collect();
    for (k, a) in arcs.iter().enumerate() {
        let (a_lo, a_hi) = span(a);
        for b in &arcs[k + 1..] {
            let (b_lo, b_hi) = span(b);
            let crosses = (a_lo < b_lo && b_lo < a_hi && a_hi < b_hi)
                || (b_lo < a_lo && a_lo < b_hi && b_hi < a_hi);
            if crosses {
                report.violations.push(Violation::Crossing {
                    first: *a,
                    second: *b,
                });
            }
        }
    }
    report
}

fn span(arc: &Arc) -> (usize, usize) {
    (arc.dependent.min(arc.head), arc.dependent.max(arc.head))
}

/// Enumerates every head-final projective tree over `n` phrases.
///
/// A tree over a span rooted at its last phrase splits the rest of the span
/// into consecutive segments, each a subtree headed by its own last phrase and
/// attached to the span root. The count for `n` phrases is the Catalan number
/// `C(n-1)`.
pub fn enumerate_trees(n: usize) -> Vec<GoldTree> {
    if n == 0 {
        return Vec::new();
    }
    span_trees(1, n)
        .into_iter()
        .map(|mut heads| {
            heads.push(ROOT);
            GoldTree { heads }
        })
        .collect()
}

/// Head assignments for phrases `first..last` of a span whose root is `last`.
fn span_trees(first: usize, last: usize) -> Vec<Vec<usize>> {
    if first == last {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    // The first segment is first..=end, headed by `end`, attached to `last`.
    for end in first..last {
        let inner = span_trees(first, end);
        let rest = span_trees(end + 1, last);
        for left in &inner {
            for right in &rest {
                let mut heads = Vec::with_capacity(last - first);
                heads.extend_from_slice(left);
                heads.push(last);
                heads.extend_from_slice(right);
                out.push(heads);
            }
        }
    }
    out
}
