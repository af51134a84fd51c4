use super::CorpusError;

/// Small kana that fuse with the preceding kana into one mora.
const MERGING_SMALL_KANA: [char; 8] = ['ャ', 'ュ', 'ョ', 'ァ', 'ィ', 'ゥ', 'ェ', 'ォ'];

const LONG_VOWEL_MARK: char = 'ー';

fn is_katakana(c: char) -> bool {
    // ァ..ヺ, excluding the middle dot ・ (U+30FB)
    ('\u{30A1}'..='\u{30FA}').contains(&c) || c == LONG_VOWEL_MARK
}

/// Counts morae in a katakana reading.
///
/// Every kana is one mora except the small glide/vowel kana (ャュョァィゥェォ),
/// which fuse with the kana before them. Sokuon ッ, moraic ン and the long
/// vowel mark ー each count as one.
pub fn count_morae(reading: &str) -> Result<u32, CorpusError> {
    let invalid = |why: &str| CorpusError::InvalidReading {
        reading: reading.to_string(),
        reason: why.to_string(),
    };
    if reading.is_empty() {
        return Err(invalid("empty reading"));
    }
    let mut morae = 0u32;
    let mut prev: Option<char> = None;
    for c in reading.chars() {
        if !is_katakana(c) {
            return Err(invalid(&format!("`{c}` is not katakana")));
        }
        if MERGING_SMALL_KANA.contains(&c) {
            match prev {
                Some(p) if p != LONG_VOWEL_MARK && !MERGING_SMALL_KANA.contains(&p) => {}
                _ => return Err(invalid(&format!("small `{c}` has no kana to attach to"))),
            }
        } else {
            morae += 1;
        }
        prev = Some(c);
    }
    Ok(morae)
}
