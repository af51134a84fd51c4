use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::corpus::CorpusFile;
use crate::transition::SentenceType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Block {
    Block1,
    Block2,
    Block3,
    Practice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub sentence_id: String,
    pub block: Block,
}

/// Ordered sentence schedule for one subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub subject_id: String,
    pub seed: u64,
    #[serde(default)]
    pub practice: bool,
    pub entries: Vec<PlanEntry>,
}

impl SessionPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.sentence_id.as_str())
    }
}

/// Block sizes of a main session. The default is 5 fillers, then 15 fillers
/// mixed with 5 sentences of each garden-path type, then 5 fillers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCounts {
    pub block1_fillers: usize,
    pub block2_fillers: usize,
    pub per_garden_path: usize,
    pub block3_fillers: usize,
}

impl Default for PlanCounts {
    fn default() -> Self {
        PlanCounts {
            block1_fillers: 5,
            block2_fillers: 15,
            per_garden_path: 5,
            block3_fillers: 5,
        }
    }
}

impl PlanCounts {
    pub fn fillers(&self) -> usize {
        self.block1_fillers + self.block2_fillers + self.block3_fillers
    }

    pub fn total(&self) -> usize {
        self.fillers() + 3 * self.per_garden_path
    }
}

pub fn build_plan(
    corpus: &CorpusFile,
    subject_id: &str,
    seed: u64,
) -> Result<SessionPlan, SessionError> {
    build_plan_with(corpus, subject_id, seed, PlanCounts::default())
}

/// Builds a main-session plan. The order depends only on the corpus and
/// `seed`: fillers are drawn into blocks at random, block 2 is shuffled with
/// the garden-path sentences, and block order is fixed.
pub fn build_plan_with(
    corpus: &CorpusFile,
    subject_id: &str,
    seed: u64,
    counts: PlanCounts,
) -> Result<SessionPlan, SessionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pool = |t: SentenceType, needed: usize| -> Result<Vec<&str>, SessionError> {
        let ids: Vec<&str> = corpus.of_type(t).map(|r| r.id()).collect();
        if ids.len() < needed {
            return Err(SessionError::InsufficientCorpus {
                category: t,
                needed,
                available: ids.len(),
            });
        }
        Ok(ids)
    };
    let mut fillers = pool(SentenceType::Filler, counts.fillers())?;
    let mut gp = Vec::new();
    for t in [SentenceType::Ctrl, SentenceType::Eb, SentenceType::Lb] {
        gp.push(pool(t, counts.per_garden_path)?);
    }

    fillers.shuffle(&mut rng);
    let mut fillers = fillers.into_iter();
    let mut take = |n: usize| fillers.by_ref().take(n).collect::<Vec<_>>();
    let block1 = take(counts.block1_fillers);
    let mut block2 = take(counts.block2_fillers);
    let block3 = take(counts.block3_fillers);
    for mut ids in gp {
        ids.shuffle(&mut rng);
        block2.extend(ids.into_iter().take(counts.per_garden_path));
    }
    block2.shuffle(&mut rng);

    let entries = [
        (Block::Block1, block1),
        (Block::Block2, block2),
        (Block::Block3, block3),
    ]
    .into_iter()
    .flat_map(|(block, ids)| {
        ids.into_iter().map(move |id| PlanEntry {
            sentence_id: id.to_string(),
            block,
        })
    })
    .collect();

    Ok(SessionPlan {
        subject_id: subject_id.to_string(),
        seed,
        practice: false,
        entries,
    })
}

/// A practice plan of `n` distinct sentences drawn from the whole corpus.
/// Practice sessions are excluded from analysis by default.
pub fn build_practice_plan(
    corpus: &CorpusFile,
    subject_id: &str,
    seed: u64,
    n: usize,
) -> Result<SessionPlan, SessionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if corpus.records.len() < n {
        return Err(SessionError::InsufficientCorpus {
            category: SentenceType::Filler,
            needed: n,
            available: corpus.records.len(),
        });
    }
    let mut ids: Vec<&str> = corpus.records.iter().map(|r| r.id()).collect();
    ids.shuffle(&mut rng);
    Ok(SessionPlan {
        subject_id: subject_id.to_string(),
        seed,
        practice: true,
        entries: ids
            .into_iter()
            .take(n)
            .map(|id| PlanEntry {
                sentence_id: id.to_string(),
                block: Block::Practice,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixture_corpus;
    use std::collections::HashSet;

    #[test]
    fn plan_shape() {
        let corpus = fixture_corpus();
        let plan = build_plan(&corpus, "S01", 7).unwrap();
        assert_eq!(plan.len(), 40);
        let ids: HashSet<&str> = plan.ids().collect();
        assert_eq!(ids.len(), 40);
        let blocks: Vec<Block> = plan.entries.iter().map(|e| e.block).collect();
        assert!(blocks[..5].iter().all(|&b| b == Block::Block1));
        assert!(blocks[5..35].iter().all(|&b| b == Block::Block2));
        assert!(blocks[35..].iter().all(|&b| b == Block::Block3));
        let index = corpus.index();
        for e in &plan.entries {
            let t = index[e.sentence_id.as_str()].sentence_type();
            if e.block != Block::Block2 {
                assert_eq!(t, SentenceType::Filler);
            }
        }
    }

    #[test]
    fn plan_is_seeded() {
        let corpus = fixture_corpus();
        assert_eq!(
            build_plan(&corpus, "S01", 7).unwrap().entries,
            build_plan(&corpus, "S02", 7).unwrap().entries
        );
        let a = build_plan(&corpus, "S01", 7).unwrap();
        let b = build_plan(&corpus, "S01", 8).unwrap();
        let block2 = |p: &SessionPlan| {
            p.entries
                .iter()
                .filter(|e| e.block == Block::Block2)
                .map(|e| e.sentence_id.clone())
                .collect::<Vec<_>>()
        };
        assert_ne!(block2(&a), block2(&b));
    }

    #[test]
    fn insufficient_corpus_names_category() {
        let mut corpus = fixture_corpus();
        let lb = corpus
            .records
            .iter()
            .position(|r| r.sentence_type() == SentenceType::Lb)
            .unwrap();
        corpus.records.remove(lb);
        match build_plan(&corpus, "S01", 1) {
            Err(SessionError::InsufficientCorpus {
                category,
                needed,
                available,
            }) => {
                assert_eq!(category, SentenceType::Lb);
                assert_eq!((needed, available), (5, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn practice_plan() {
        let corpus = fixture_corpus();
        let p = build_practice_plan(&corpus, "S01", 3, 10).unwrap();
        assert!(p.practice);
        assert_eq!(p.len(), 10);
        assert_eq!(p.ids().collect::<HashSet<_>>().len(), 10);
    }
}
