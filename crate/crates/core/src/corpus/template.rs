use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, LexEntry, Lexicon, SentenceRecord, SlotRole};
use crate::transition::{CaseMarker, GoldTree, Phrase, Sentence, SentenceType, ROOT};

/// One of the six template positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSpec {
    pub role: SlotRole,
    /// Required marker; `None` for verb slots.
    pub marker: Option<CaseMarker>,
    /// Particle appended to noun stems: (surface, katakana reading).
    pub particle: Option<(&'static str, &'static str)>,
}

const fn np(marker: CaseMarker, surface: &'static str, reading: &'static str) -> SlotSpec {
    SlotSpec {
        role: SlotRole::Np,
        marker: Some(marker),
        particle: Some((surface, reading)),
    }
}

const V_PAST: SlotSpec = SlotSpec {
    role: SlotRole::VPast,
    marker: None,
    particle: None,
};
const NOM: SlotSpec = np(CaseMarker::Nom, "が", "ガ");
const ACC: SlotSpec = np(CaseMarker::Acc, "を", "ヲ");
const DAT: SlotSpec = np(CaseMarker::Dat, "に", "ニ");
const OTHER: SlotSpec = SlotSpec {
    role: SlotRole::XOther,
    marker: Some(CaseMarker::Other),
    particle: None,
};

/// Garden-path sentence template: NP-NOM NP-ACC V-PAST NP-DAT X V-PAST.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpTemplate {
    pub sentence_type: SentenceType,
    pub slots: [SlotSpec; 6],
    pub gold: GoldTree,
}

/// Gold structure of each garden-path type.
///
/// Phrase 3 heads phrase 4 (relative clause on the dative noun) and phrase 4
/// and 5 attach to the main verb in all three types. The types differ in
/// where phrases 1 and 2 attach:
///
/// | type | 1 → | 2 → |
/// |------|-----|-----|
/// | CTRL | 3   | 3   |
/// | EB   | 6   | 3   |
/// | LB   | 6   | 6   |
pub fn gold_tree_for(t: SentenceType) -> Result<GoldTree, CorpusError> {
    let heads = match t {
        SentenceType::Ctrl => vec![3, 3, 4, 6, 6, ROOT],
        SentenceType::Eb => vec![6, 3, 4, 6, 6, ROOT],
        SentenceType::Lb => vec![6, 6, 4, 6, 6, ROOT],
        SentenceType::Filler => return Err(CorpusError::NotGardenPath(t)),
    };
    Ok(GoldTree::new(heads))
}

pub fn template_for(t: SentenceType) -> Result<GpTemplate, CorpusError> {
    let fifth = match t {
        SentenceType::Ctrl => NOM,
        SentenceType::Eb => ACC,
        SentenceType::Lb => OTHER,
        SentenceType::Filler => return Err(CorpusError::NotGardenPath(t)),
    };
    Ok(GpTemplate {
        sentence_type: t,
        slots: [NOM, ACC, V_PAST, DAT, fifth, V_PAST],
        gold: gold_tree_for(t)?,
    })
}

/// Fills a garden-path template from the lexicon. No noun stem repeats
/// within a sentence; the result depends only on the inputs and `seed`.
pub fn generate_gp_sentence(
    t: SentenceType,
    lexicon: &Lexicon,
    seed: u64,
    id: &str,
) -> Result<SentenceRecord, CorpusError> {
    let template = template_for(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let needed_np = template
        .slots
        .iter()
        .filter(|s| s.role == SlotRole::Np)
        .count();
    if lexicon.np.len() < needed_np {
        return Err(CorpusError::InsufficientLexicon(format!(
            "{t} needs {needed_np} distinct NP entries, lexicon has {}",
            lexicon.np.len()
        )));
    }
    for role in [SlotRole::VPast, SlotRole::XOther] {
        if template.slots.iter().any(|s| s.role == role) && lexicon.entries(role).is_empty() {
            return Err(CorpusError::InsufficientLexicon(format!(
                "{t} needs a {role:?} entry"
            )));
        }
    }

    let mut nouns = sample(&mut rng, lexicon.np.len(), needed_np).into_iter();
    // distinct verbs when the pool allows it
    let needed_v = template
        .slots
        .iter()
        .filter(|s| s.role == SlotRole::VPast)
        .count();
    let mut verbs = sample(
        &mut rng,
        lexicon.v_past.len(),
        needed_v.min(lexicon.v_past.len()),
    )
    .into_vec();
    let mut phrases = Vec::with_capacity(6);
    for (i, slot) in template.slots.iter().enumerate() {
        let entry: &LexEntry = match slot.role {
            SlotRole::Np => &lexicon.np[nouns.next().expect("sampled enough nouns")],
            SlotRole::VPast if !verbs.is_empty() => &lexicon.v_past[verbs.remove(0)],
            role => {
                let pool = lexicon.entries(role);
                &pool[rng.random_range(0..pool.len())]
            }
        };
        let (psurf, pread) = slot.particle.unwrap_or(("", ""));
        let reading = format!("{}{}", entry.reading, pread);
        phrases.push(Phrase {
            index: i + 1,
            surface: format!("{}{}", entry.surface, psurf),
            char_count: entry.char_count + psurf.chars().count() as u32,
            mora_count: super::count_morae(&reading)?,
            reading: Some(reading),
            case_marker: slot.marker,
        });
    }

    Ok(SentenceRecord {
        sentence: Sentence {
            id: id.to_string(),
            type_tag: t,
            phrases,
        },
        heads: template.gold,
    })
}
