//! Sentence corpora, the garden-path templates and phrase length metadata.
//!
//! # File format
//!
//! A corpus is UTF-8 JSON Lines. The first non-blank line is a header
//! `{"format":"srdp-corpus","version":1}`; every following line is one
//! sentence record:
//!
//! ```text
//! {"id":"ctrl-01","type":"CTRL",
//!  "phrases":[{"index":1,"surface":"少年が","reading":"ショウネンガ","chars":3,"morae":5,"marker":"NOM"}, ...],
//!  "heads":[3,3,4,6,6,0]}
//! ```
//!
//! `heads[i-1]` is the head of phrase `i`, `0` marks the root. Blank lines
//! and lines starting with `#` are skipped.

mod lexicon;
mod mora;
mod template;

pub use lexicon::{LexEntry, Lexicon, SlotRole};
pub use mora::count_morae;
pub use template::{generate_gp_sentence, gold_tree_for, template_for, GpTemplate, SlotSpec};

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transition::{validate_tree, CaseMarker, GoldTree, Sentence, SentenceType, Violation};

pub const CORPUS_FORMAT: &str = "srdp-corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid reading `{reading}`: {reason}")]
    InvalidReading { reading: String, reason: String },
    #[error("insufficient lexicon: {0}")]
    InsufficientLexicon(String),
    #[error("{0} is not a garden-path type")]
    NotGardenPath(SentenceType),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A sentence together with its gold head array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    #[serde(flatten)]
    pub sentence: Sentence,
    pub heads: GoldTree,
}

impl SentenceRecord {
    pub fn id(&self) -> &str {
        &self.sentence.id
    }

    pub fn sentence_type(&self) -> SentenceType {
        self.sentence.type_tag
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// A parsed corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub version: u32,
    pub records: Vec<SentenceRecord>,
}

impl CorpusFile {
    pub fn new(records: Vec<SentenceRecord>) -> Self {
        CorpusFile {
            version: CORPUS_VERSION,
            records,
        }
    }

    pub fn get(&self, id: &str) -> Option<&SentenceRecord> {
        self.records.iter().find(|r| r.id() == id)
    }

    pub fn of_type(&self, t: SentenceType) -> impl Iterator<Item = &SentenceRecord> {
        self.records.iter().filter(move |r| r.sentence_type() == t)
    }

    pub fn count(&self, t: SentenceType) -> usize {
        self.of_type(t).count()
    }

    /// Id → record lookup table.
    pub fn index(&self) -> HashMap<&str, &SentenceRecord> {
        self.records.iter().map(|r| (r.id(), r)).collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header {
            format: CORPUS_FORMAT.to_string(),
            version: self.version,
        })
        .expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses corpus text. Errors carry the 1-based line number and, when it
/// can be recovered, the record id.
pub fn parse_corpus(text: &str) -> Result<CorpusFile, CorpusError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line, first) = lines.next().ok_or(CorpusError::Parse {
        line: 1,
        message: "empty corpus file".into(),
    })?;
    let header: Header = serde_json::from_str(first).map_err(|e| CorpusError::Parse {
        line,
        message: format!("bad header: {e}"),
    })?;
    if header.format != CORPUS_FORMAT {
        return Err(CorpusError::Parse {
            line,
            message: format!("unknown format `{}`", header.format),
        });
    }
    if header.version != CORPUS_VERSION {
        return Err(CorpusError::Parse {
            line,
            message: format!("unsupported version {}", header.version),
        });
    }

    let mut records = Vec::new();
    for (line, l) in lines {
        let record: SentenceRecord = serde_json::from_str(l).map_err(|e| {
            let id = serde_json::from_str::<serde_json::Value>(l)
                .ok()
                .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(str::to_owned));
            CorpusError::Parse {
                line,
                message: match id {
                    Some(id) => format!("record `{id}`: {e}"),
                    None => e.to_string(),
                },
            }
        })?;
        records.push(record);
    }
    Ok(CorpusFile {
        version: header.version,
        records,
    })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusFile, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text)
}

const FIXTURE_CORPUS: &str = include_str!("../../data/corpus.jsonl");
const FIXTURE_FILLERS: &str = include_str!("../../data/fillers.jsonl");

/// The shipped corpus: 25 fillers and 5 sentences of each garden-path type.
pub fn fixture_corpus() -> CorpusFile {
    parse_corpus(FIXTURE_CORPUS).expect("fixture corpus parses")
}

/// The authored filler sentences the fixture corpus is built from.
pub fn fixture_fillers() -> CorpusFile {
    parse_corpus(FIXTURE_FILLERS).expect("fixture fillers parse")
}

/// Builds a corpus from fillers plus `per_type` generated sentences of each
/// garden-path type. Sentence `k` of a type uses seed `seed + k`.
pub fn build_corpus(
    fillers: &CorpusFile,
    lexicon: &Lexicon,
    per_type: usize,
    seed: u64,
) -> Result<CorpusFile, CorpusError> {
    let mut records: Vec<SentenceRecord> = fillers
        .records
        .iter()
        .filter(|r| r.sentence_type() == SentenceType::Filler)
        .cloned()
        .collect();
    for t in [SentenceType::Ctrl, SentenceType::Eb, SentenceType::Lb] {
        for k in 1..=per_type {
            let id = format!("{}-{:02}", t.label().to_ascii_lowercase(), k);
            records.push(generate_gp_sentence(
                t,
                lexicon,
                seed.wrapping_add(k as u64),
                &id,
            )?);
        }
    }
    Ok(CorpusFile::new(records))
}

/// One problem found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusIssue {
    pub record: String,
    pub kind: IssueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum IssueKind {
    DuplicateId,
    Structure {
        message: String,
    },
    Tree {
        violation: Violation,
    },
    TemplateLength {
        found: usize,
    },
    TemplateMarker {
        phrase: usize,
        expected: Option<CaseMarker>,
        found: Option<CaseMarker>,
    },
    TemplateTree {
        expected: GoldTree,
        found: GoldTree,
    },
    CharCount {
        phrase: usize,
        stored: u32,
        derived: u32,
    },
    MoraCount {
        phrase: usize,
        stored: u32,
        derived: u32,
    },
    BadReading {
        phrase: usize,
        message: String,
    },
}

impl std::fmt::Display for CorpusIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: ", self.record)?;
        match &self.kind {
            IssueKind::DuplicateId => f.write_str("duplicate id"),
            IssueKind::Structure { message } => f.write_str(message),
            IssueKind::Tree { violation } => write!(f, "{violation}"),
            IssueKind::TemplateLength { found } => {
                write!(f, "garden-path sentence has {found} phrases, expected 6")
            }
            IssueKind::TemplateMarker {
                phrase,
                expected,
                found,
            } => write!(
                f,
                "phrase {phrase}: marker {found:?} does not match template {expected:?}"
            ),
            IssueKind::TemplateTree { expected, found } => write!(
                f,
                "heads {:?} differ from template heads {:?}",
                found.heads, expected.heads
            ),
            IssueKind::CharCount {
                phrase,
                stored,
                derived,
            } => {
                write!(
                    f,
                    "phrase {phrase}: stored {stored} chars, surface has {derived}"
                )
            }
            IssueKind::MoraCount {
                phrase,
                stored,
                derived,
            } => {
                write!(
                    f,
                    "phrase {phrase}: stored {stored} morae, reading has {derived}"
                )
            }
            IssueKind::BadReading { phrase, message } => write!(f, "phrase {phrase}: {message}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusReport {
    pub issues: Vec<CorpusIssue>,
}

impl CorpusReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Lints a corpus: id uniqueness, tree validity, garden-path template
/// conformance and re-derivable length metadata. Collects every issue.
pub fn validate_corpus(corpus: &CorpusFile) -> CorpusReport {
    let mut issues = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for r in &corpus.records {
        let id = r.id();
        let mut push = |kind| {
            issues.push(CorpusIssue {
                record: id.to_string(),
                kind,
            })
        };
        let count = seen.entry(id).or_insert(0);
        *count += 1;
        if *count == 2 {
            push(IssueKind::DuplicateId);
        }

        let s = &r.sentence;
        if let Err(e) = s.check() {
            push(IssueKind::Structure {
                message: e.to_string(),
            });
        }
        for violation in validate_tree(&r.heads, s.len()).violations {
            push(IssueKind::Tree { violation });
        }

        if let Ok(template) = template_for(s.type_tag) {
            if s.len() != 6 {
                push(IssueKind::TemplateLength { found: s.len() });
            } else {
                for (slot, p) in template.slots.iter().zip(&s.phrases) {
                    if let Some(expected) = slot.marker {
                        if p.case_marker != Some(expected) {
                            push(IssueKind::TemplateMarker {
                                phrase: p.index,
                                expected: Some(expected),
                                found: p.case_marker,
                            });
                        }
                    }
                }
                if r.heads != template.gold {
                    push(IssueKind::TemplateTree {
                        expected: template.gold.clone(),
                        found: r.heads.clone(),
                    });
                }
            }
        }

        for p in &s.phrases {
            let chars = p.surface.chars().count() as u32;
            if chars != p.char_count {
                push(IssueKind::CharCount {
                    phrase: p.index,
                    stored: p.char_count,
                    derived: chars,
                });
            }
            if let Some(reading) = &p.reading {
                match count_morae(reading) {
                    Ok(m) if m != p.mora_count => push(IssueKind::MoraCount {
                        phrase: p.index,
                        stored: p.mora_count,
                        derived: m,
                    }),
                    Ok(_) => {}
                    Err(e) => push(IssueKind::BadReading {
                        phrase: p.index,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
    CorpusReport { issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::ROOT;

    #[test]
    fn fixture_is_valid() {
        let c = fixture_corpus();
        let report = validate_corpus(&c);
        assert!(report.is_valid(), "{:#?}", report.issues);
        assert_eq!(c.count(SentenceType::Filler), 25);
        assert_eq!(c.count(SentenceType::Ctrl), 5);
        assert_eq!(c.count(SentenceType::Eb), 5);
        assert_eq!(c.count(SentenceType::Lb), 5);
    }

    #[test]
    fn fixture_is_reproducible_from_fillers_and_lexicon() {
        let rebuilt = build_corpus(&fixture_fillers(), &Lexicon::fixture(), 5, 2015).unwrap();
        assert_eq!(rebuilt, fixture_corpus());
    }

    #[test]
    fn text_round_trip() {
        let c = fixture_corpus();
        let text = c.to_jsonl();
        assert_eq!(parse_corpus(&text).unwrap(), c);
        assert_eq!(text, FIXTURE_CORPUS);
    }

    #[test]
    fn head_final_violation_reported() {
        let mut c = fixture_corpus();
        c.records.retain(|r| r.id() == "ctrl-01");
        let n = c.records[0].sentence.len();
        let mut heads = vec![2, 1];
        heads.extend((3..n).map(|i| i + 1));
        heads.push(ROOT);
        c.records[0].heads = GoldTree::new(heads);
        let report = validate_corpus(&c);
        assert!(report.issues.iter().any(|i| matches!(
            i.kind,
            IssueKind::Tree {
                violation: Violation::NotHeadFinal { phrase: 2, head: 1 }
            }
        )));
    }

    #[test]
    fn duplicate_id_reported() {
        let mut c = fixture_corpus();
        let dup = c.records[0].clone();
        c.records.push(dup);
        let report = validate_corpus(&c);
        assert_eq!(
            report
                .issues
                .iter()
                .filter(|i| i.kind == IssueKind::DuplicateId)
                .count(),
            1
        );
    }

    #[test]
    fn metadata_mismatch_reported() {
        let mut c = fixture_corpus();
        c.records.truncate(1);
        c.records[0].sentence.phrases[0].mora_count += 1;
        c.records[0].sentence.phrases[1].char_count += 1;
        let kinds: Vec<_> = validate_corpus(&c)
            .issues
            .into_iter()
            .map(|i| i.kind)
            .collect();
        assert!(kinds
            .iter()
            .any(|k| matches!(k, IssueKind::MoraCount { phrase: 1, .. })));
        assert!(kinds
            .iter()
            .any(|k| matches!(k, IssueKind::CharCount { phrase: 2, .. })));
    }

    #[test]
    fn garden_path_template_conformance() {
        let mut c = fixture_corpus();
        let ctrl = c
            .records
            .iter()
            .position(|r| r.sentence_type() == SentenceType::Ctrl)
            .unwrap();
        c.records[ctrl].heads = gold_tree_for(SentenceType::Lb).unwrap();
        c.records[ctrl].sentence.phrases[4].case_marker = Some(CaseMarker::Acc);
        let kinds: Vec<_> = validate_corpus(&c)
            .issues
            .into_iter()
            .map(|i| i.kind)
            .collect();
        assert!(kinds
            .iter()
            .any(|k| matches!(k, IssueKind::TemplateTree { .. })));
        assert!(kinds
            .iter()
            .any(|k| matches!(k, IssueKind::TemplateMarker { phrase: 5, .. })));
    }

    #[test]
    fn parse_errors_carry_line_and_id() {
        let text =
            "{\"format\":\"srdp-corpus\",\"version\":1}\n\n{\"id\":\"x1\",\"type\":\"FILLER\"}\n";
        match parse_corpus(text) {
            Err(CorpusError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x1"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_corpus("{\"format\":\"other\",\"version\":1}"),
            Err(CorpusError::Parse { line: 1, .. })
        ));
        assert!(parse_corpus("").is_err());
    }
}
