//! Precision / recall / F1 against gold keys, overall and per subset.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("duplicate gold entry for `{0}`")]
    DuplicateGold(String),
    #[error("duplicate prediction for `{0}`")]
    DuplicatePrediction(String),
    #[error("prediction for unknown instance `{0}`")]
    UnknownInstance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of a key file: `<instance_id> <key> [<key> ...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLine {
    pub instance_id: String,
    pub keys: Vec<String>,
}

pub fn parse_keys<R: BufRead>(reader: R) -> Result<Vec<KeyLine>, ScoreError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else { continue };
        let keys: Vec<String> = fields.map(str::to_string).collect();
        if keys.is_empty() {
            return Err(ScoreError::Malformed { line: i + 1, msg: format!("no keys for `{id}`") });
        }
        out.push(KeyLine { instance_id: id.to_string(), keys });
    }
    Ok(out)
}

pub fn write_keys(lines: &[KeyLine]) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(&l.instance_id);
        for k in &l.keys {
            out.push(' ');
            out.push_str(k);
        }
        out.push('\n');
    }
    out
}

const SUBSETS: [(&str, &str); 5] =
    [("senseval2", "S2"), ("senseval3", "S3"), ("semeval2007", "S07"), ("semeval2013", "S13"), ("semeval2015", "S15")];

/// Subset label from an instance id such as `senseval2.d000.s000.t000`.
pub fn subset_label(instance_id: &str) -> String {
    match instance_id.split_once('.') {
        Some((prefix, _)) => SUBSETS
            .iter()
            .find(|(p, _)| *p == prefix)
            .map_or_else(|| prefix.to_string(), |(_, label)| label.to_string()),
        None => "other".to_string(),
    }
}

fn subset_rank(label: &str) -> (usize, &str) {
    let pos = SUBSETS.iter().position(|(_, l)| *l == label).unwrap_or(SUBSETS.len());
    (pos, label)
}

#[derive(Debug, Clone, Default)]
pub struct GoldKey {
    entries: HashMap<String, (HashSet<String>, String)>,
}

impl GoldKey {
    pub fn from_lines(lines: &[KeyLine]) -> Result<Self, ScoreError> {
        let mut entries = HashMap::new();
        for l in lines {
            let keys = l.keys.iter().cloned().collect();
            let subset = subset_label(&l.instance_id);
            if entries.insert(l.instance_id.clone(), (keys, subset)).is_some() {
                return Err(ScoreError::DuplicateGold(l.instance_id.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, instance_id: &str) -> bool {
        self.entries.contains_key(instance_id)
    }

    pub fn keys(&self, instance_id: &str) -> Option<&HashSet<String>> {
        self.entries.get(instance_id).map(|e| &e.0)
    }

    pub fn instance_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub attempted: usize,
    pub correct: usize,
    pub total: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.attempted += o.attempted;
        self.correct += o.correct;
        self.total += o.total;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetScore {
    pub name: String,
    pub attempted: usize,
    pub correct: usize,
    pub total: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SubsetScore {
    pub fn from_counts(name: &str, c: Counts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(c.correct, c.attempted);
        let recall = ratio(c.correct, c.total);
        // Same as 2PR/(P+R), without the rounding that breaks P == R == F1.
        let f1 = ratio(2 * c.correct, c.attempted + c.total);
        Self {
            name: name.to_string(),
            attempted: c.attempted,
            correct: c.correct,
            total: c.total,
            precision,
            recall,
            f1,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts { attempted: self.attempted, correct: self.correct, total: self.total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub overall: SubsetScore,
    /// Known subsets first (S2, S3, S07, S13, S15), then others by name.
    pub subsets: Vec<SubsetScore>,
}

impl ScoreReport {
    pub fn subset(&self, name: &str) -> Option<&SubsetScore> {
        self.subsets.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary with F1 to one decimal.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{:<8} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7}\n",
            "subset", "attempted", "correct", "total", "P", "R", "F1"
        );
        for s in std::iter::once(&self.overall).chain(&self.subsets) {
            out.push_str(&format!(
                "{:<8} {:>9} {:>9} {:>9} {:>7.1} {:>7.1} {:>7.1}\n",
                s.name,
                s.attempted,
                s.correct,
                s.total,
                100.0 * s.precision,
                100.0 * s.recall,
                100.0 * s.f1
            ));
        }
        out
    }
}

/// An instance counts as correct when its first predicted key is among
/// the gold keys. Overall figures are micro-averaged.
pub fn score(preds: &[KeyLine], gold: &GoldKey) -> Result<ScoreReport, ScoreError> {
    let mut per: BTreeMap<(usize, String), Counts> = BTreeMap::new();
    let label_key = |label: &str| {
        let (r, l) = subset_rank(label);
        (r, l.to_string())
    };
    for (keys, subset) in gold.entries.values() {
        debug_assert!(!keys.is_empty());
        per.entry(label_key(subset)).or_default().total += 1;
    }
    let mut seen = HashSet::new();
    for p in preds {
        let (keys, subset) =
            gold.entries.get(&p.instance_id).ok_or_else(|| ScoreError::UnknownInstance(p.instance_id.clone()))?;
        if !seen.insert(p.instance_id.as_str()) {
            return Err(ScoreError::DuplicatePrediction(p.instance_id.clone()));
        }
        let c = per.get_mut(&label_key(subset)).unwrap();
        c.attempted += 1;
        if p.keys.first().is_some_and(|k| keys.contains(k)) {
            c.correct += 1;
        }
    }
    let mut overall = Counts::default();
    for c in per.values() {
        overall += *c;
    }
    Ok(ScoreReport {
        overall: SubsetScore::from_counts("All", overall),
        subsets: per.into_iter().map(|((_, name), c)| SubsetScore::from_counts(&name, c)).collect(),
    })
}
