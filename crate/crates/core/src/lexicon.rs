//! Headword dictionary with tagged sense counts.
//!
//! Each line maps a `lemma#pos` headword to its candidate concepts with the
//! number of times each sense was tagged in sense-annotated text:
//!
//! ```text
//! house#n 03544360-n:20 03544117-n:1
//! ```

use std::collections::HashSet;
use std::io::BufRead;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate headword `{headword}`")]
    DuplicateHeadword { line: usize, headword: String },
    #[error("line {line}: concept `{concept}` listed twice for `{headword}`")]
    DuplicateConcept { line: usize, headword: String, concept: String },
    #[error("`{0}` is out of vocabulary")]
    OutOfVocabulary(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseEntry {
    pub concept: String,
    pub tag_count: u64,
}

/// Builds the `lemma#pos` key used for dictionary lookups.
pub fn headword(lemma: &str, pos: char) -> String {
    format!("{}#{}", lemma.to_lowercase(), pos)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dictionary {
    entries: IndexMap<String, Vec<SenseEntry>>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, headword: &str) -> bool {
        self.entries.contains_key(headword)
    }

    /// Candidate senses of `headword` in file order.
    pub fn senses(&self, headword: &str) -> Result<&[SenseEntry], LexiconError> {
        self.entries.get(headword).map(Vec::as_slice).ok_or_else(|| LexiconError::OutOfVocabulary(headword.to_string()))
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Add-one smoothed sense distribution, aligned with [`Self::senses`].
    pub fn smoothed_distribution(&self, headword: &str) -> Result<Vec<f64>, LexiconError> {
        Ok(smoothed(self.senses(headword)?))
    }

    /// Most frequent sense: highest tag count, earliest entry on ties.
    pub fn mfs(&self, headword: &str) -> Result<&str, LexiconError> {
        let senses = self.senses(headword)?;
        let mut best = &senses[0];
        for s in &senses[1..] {
            if s.tag_count > best.tag_count {
                best = s;
            }
        }
        Ok(&best.concept)
    }

    pub fn insert(&mut self, headword: String, senses: Vec<SenseEntry>) {
        self.entries.insert(headword, senses);
    }

    /// Serializes back to dictionary lines in entry order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (hw, senses) in &self.entries {
            out.push_str(hw);
            for s in senses {
                out.push(' ');
                out.push_str(&s.concept);
                out.push(':');
                out.push_str(&s.tag_count.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn smoothed(senses: &[SenseEntry]) -> Vec<f64> {
    let total: f64 = senses.iter().map(|s| s.tag_count as f64 + 1.0).sum();
    senses.iter().map(|s| (s.tag_count as f64 + 1.0) / total).collect()
}

pub fn load_dictionary<R: BufRead>(reader: R) -> Result<Dictionary, LexiconError> {
    let mut dict = Dictionary::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |msg: String| LexiconError::Malformed { line: lineno, msg };
        let mut fields = trimmed.split_whitespace();
        let hw = fields.next().unwrap();
        let mut seen = HashSet::new();
        let mut senses = Vec::new();
        for field in fields {
            let (concept, count) =
                field.rsplit_once(':').ok_or_else(|| malformed(format!("missing count separator in `{field}`")))?;
            if concept.is_empty() {
                return Err(malformed(format!("empty concept in `{field}`")));
            }
            if count.starts_with('-') {
                return Err(malformed(format!("negative count in `{field}`")));
            }
            let tag_count: u64 = count.parse().map_err(|_| malformed(format!("invalid count in `{field}`")))?;
            if !seen.insert(concept) {
                return Err(LexiconError::DuplicateConcept {
                    line: lineno,
                    headword: hw.to_string(),
                    concept: concept.to_string(),
                });
            }
            senses.push(SenseEntry { concept: concept.to_string(), tag_count });
        }
        if senses.is_empty() {
            return Err(malformed(format!("headword `{hw}` has no senses")));
        }
        if dict.entries.contains_key(hw) {
            return Err(LexiconError::DuplicateHeadword { line: lineno, headword: hw.to_string() });
        }
        dict.entries.insert(hw.to_string(), senses);
    }
    Ok(dict)
}
