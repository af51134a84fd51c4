use serde::{Deserialize, Serialize};

use super::{count_morae, CorpusError};

/// Which template slots an entry can fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotRole {
    /// Noun stem; the case particle is appended by the template.
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "V-PAST")]
    VPast,
    /// Filler for the LB fifth slot (adverbials).
    #[serde(rename = "X-OTHER")]
    XOther,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub role: SlotRole,
    pub surface: String,
    pub reading: String,
    #[serde(rename = "chars")]
    pub char_count: u32,
    #[serde(rename = "morae")]
    pub mora_count: u32,
}

/// Fixture vocabulary grouped by slot role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub np: Vec<LexEntry>,
    pub v_past: Vec<LexEntry>,
    pub x_other: Vec<LexEntry>,
}

const FIXTURE_LEXICON: &str = include_str!("../../data/lexicon.jsonl");

impl Lexicon {
    /// Parses a JSON Lines lexicon, one entry per line. Stored counts must
    /// agree with the surface and the reading.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lex = Lexicon::default();
        for (i, l) in text.lines().enumerate() {
            let line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let e: LexEntry = serde_json::from_str(l).map_err(|e| CorpusError::Parse {
                line,
                message: e.to_string(),
            })?;
            let morae = count_morae(&e.reading)?;
            if morae != e.mora_count || e.surface.chars().count() as u32 != e.char_count {
                return Err(CorpusError::Parse {
                    line,
                    message: format!("length metadata of `{}` does not match", e.surface),
                });
            }
            lex.entries_mut(e.role).push(e);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, CorpusError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn fixture() -> Self {
        Self::parse(FIXTURE_LEXICON).expect("fixture lexicon parses")
    }

    pub fn entries(&self, role: SlotRole) -> &[LexEntry] {
        match role {
            SlotRole::Np => &self.np,
            SlotRole::VPast => &self.v_past,
            SlotRole::XOther => &self.x_other,
        }
    }

    fn entries_mut(&mut self, role: SlotRole) -> &mut Vec<LexEntry> {
        match role {
            SlotRole::Np => &mut self.np,
            SlotRole::VPast => &mut self.v_past,
            SlotRole::XOther => &mut self.x_other,
        }
    }
}
