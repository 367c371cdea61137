//! Ingestion of the unified all-words evaluation data and WordNet's
//! `index.sense`, plus conversion between sense keys and concept ids.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Read};

use thiserror::Error;
use xml::common::Position;
use xml::reader::{EventReader, XmlEvent};

use crate::corpus::{Document, Pos, Sentence, Token};
use crate::lexicon::{Dictionary, SenseEntry};
use crate::scorer::KeyLine;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("xml {row}:{column}: {msg}")]
    Xml { row: u64, column: u64, msg: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate sense key `{key}`")]
    DuplicateSenseKey { line: usize, key: String },
    #[error("gold instances missing from corpus: {0:?}")]
    MissingInstances(Vec<String>),
    #[error("instance `{0}` appears more than once")]
    DuplicateInstance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn map_pos(tag: &str) -> Pos {
    match tag {
        "NOUN" => Pos::Noun,
        "VERB" => Pos::Verb,
        "ADJ" => Pos::Adj,
        "ADV" => Pos::Adv,
        _ => Pos::Other,
    }
}

struct OpenToken {
    lemma: Option<String>,
    pos: Pos,
    instance_id: Option<String>,
    surface: String,
}

/// Reads `text` / `sentence` / `wf` / `instance` elements into documents.
/// Other elements and unknown attributes are ignored.
pub fn parse_unified_xml<R: Read>(reader: R) -> Result<Vec<Document>, IngestError> {
    let mut parser = EventReader::new(reader);
    let mut docs: Vec<Document> = Vec::new();
    let mut token: Option<OpenToken> = None;
    let mut doc_counter = 0;
    loop {
        let event = parser.next();
        let here = parser.position();
        let err = |msg: String| IngestError::Xml { row: here.row + 1, column: here.column + 1, msg };
        match event.map_err(|e| err(e.msg().to_string()))? {
            XmlEvent::StartElement { name, attributes, .. } => {
                let attr = |k: &str| attributes.iter().find(|a| a.name.local_name == k).map(|a| a.value.clone());
                match name.local_name.as_str() {
                    "text" => {
                        doc_counter += 1;
                        let id = attr("id").unwrap_or_else(|| format!("d{doc_counter:03}"));
                        docs.push(Document { id, sentences: Vec::new() });
                    }
                    "sentence" => {
                        let doc = docs.last_mut().ok_or_else(|| err("sentence outside text".into()))?;
                        let id = attr("id").unwrap_or_else(|| format!("{}.s{:03}", doc.id, doc.sentences.len()));
                        doc.sentences.push(Sentence { id, tokens: Vec::new() });
                    }
                    tag @ ("wf" | "instance") => {
                        let is_instance = tag == "instance";
                        let pos = attr("pos");
                        let lemma = attr("lemma");
                        let instance_id = if is_instance {
                            let id = attr("id").ok_or_else(|| err("instance without id".into()))?;
                            if lemma.is_none() || pos.is_none() {
                                return Err(err(format!("instance `{id}` lacks lemma or pos")));
                            }
                            Some(id)
                        } else {
                            None
                        };
                        let pos = pos.as_deref().map_or(Pos::Other, map_pos);
                        if is_instance && !pos.is_content() {
                            return Err(err(format!("instance `{}` has a non-content pos", instance_id.unwrap())));
                        }
                        token = Some(OpenToken { lemma, pos, instance_id, surface: String::new() });
                    }
                    _ => {}
                }
            }
            XmlEvent::Characters(text) => {
                if let Some(t) = token.as_mut() {
                    t.surface.push_str(&text);
                }
            }
            XmlEvent::EndElement { name } => match name.local_name.as_str() {
                "wf" | "instance" => {
                    let t = token.take().unwrap();
                    let sentence = docs
                        .last_mut()
                        .and_then(|d| d.sentences.last_mut())
                        .ok_or_else(|| err("token outside sentence".into()))?;
                    let surface = t.surface.trim().to_string();
                    let lemma = t.lemma.unwrap_or_else(|| surface.to_lowercase());
                    sentence.tokens.push(Token { surface, lemma, pos: t.pos, instance_id: t.instance_id });
                }
                "sentence" => {
                    if let Some(s) = docs.last().and_then(|d| d.sentences.last()) {
                        if s.tokens.is_empty() {
                            return Err(err(format!("sentence `{}` is empty", s.id)));
                        }
                    }
                }
                _ => {}
            },
            XmlEvent::EndDocument => break,
            _ => {}
        }
    }
    Ok(docs)
}

/// Every gold instance must occur exactly once in the corpus.
pub fn check_gold_coverage(docs: &[Document], gold: &[KeyLine]) -> Result<(), IngestError> {
    let mut seen = HashSet::new();
    for t in docs.iter().flat_map(|d| &d.sentences).flat_map(|s| &s.tokens) {
        if let Some(id) = &t.instance_id {
            if !seen.insert(id.as_str()) {
                return Err(IngestError::DuplicateInstance(id.clone()));
            }
        }
    }
    let missing: Vec<String> =
        gold.iter().filter(|l| !seen.contains(l.instance_id.as_str())).map(|l| l.instance_id.clone()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(IngestError::MissingInstances(missing))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseRecord {
    pub concept: String,
    pub sense_number: u32,
    pub tag_count: u64,
}

/// Lemma part of a sense key (`art%1:06:00::` → `art`).
pub fn sense_key_lemma(key: &str) -> &str {
    key.split_once('%').map_or(key, |(l, _)| l)
}

fn pos_letter(ss_type: char) -> Option<char> {
    match ss_type {
        '1' => Some('n'),
        '2' => Some('v'),
        '3' | '5' => Some('a'),
        '4' => Some('r'),
        _ => None,
    }
}

#[derive(Debug, Clone, Default)]
pub struct SenseIndex {
    keys: Vec<String>,
    by_key: HashMap<String, SenseRecord>,
    by_concept: HashMap<String, Vec<String>>,
}

impl SenseIndex {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&SenseRecord> {
        self.by_key.get(key)
    }

    pub fn concept(&self, key: &str) -> Option<&str> {
        self.by_key.get(key).map(|r| r.concept.as_str())
    }

    /// Sense keys of `concept`, in file order.
    pub fn sense_keys(&self, concept: &str) -> &[String] {
        self.by_concept.get(concept).map_or(&[], Vec::as_slice)
    }

    /// Dictionary built from the index: one `lemma#pos` headword per
    /// lemma and part of speech, senses ordered by sense number, tag counts
    /// as frequencies. Headwords come out sorted.
    pub fn to_dictionary(&self) -> Dictionary {
        let mut grouped: BTreeMap<String, Vec<(u32, usize, &SenseRecord)>> = BTreeMap::new();
        for (i, key) in self.keys.iter().enumerate() {
            let rec = &self.by_key[key];
            let pos = rec.concept.rsplit('-').next().unwrap_or("n");
            let hw = format!("{}#{}", sense_key_lemma(key).to_lowercase(), pos);
            grouped.entry(hw).or_default().push((rec.sense_number, i, rec));
        }
        let mut dict = Dictionary::default();
        for (hw, mut recs) in grouped {
            recs.sort_by_key(|&(n, i, _)| (n, i));
            let mut senses: Vec<SenseEntry> = Vec::new();
            for (_, _, rec) in recs {
                match senses.iter_mut().find(|s| s.concept == rec.concept) {
                    Some(s) => s.tag_count += rec.tag_count,
                    None => senses.push(SenseEntry { concept: rec.concept.clone(), tag_count: rec.tag_count }),
                }
            }
            dict.insert(hw, senses);
        }
        dict
    }
}

/// Parses `index.sense` lines: `<sense_key> <offset> <sense_number> <tag_count>`.
pub fn load_sense_index<R: BufRead>(reader: R) -> Result<SenseIndex, IngestError> {
    let mut idx = SenseIndex::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let malformed = |msg: String| IngestError::Malformed { line: lineno, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [key, offset, sense_number, tag_count] = fields[..] else {
            return Err(malformed(format!("expected 4 fields, found {}", fields.len())));
        };
        let ss_type = key
            .split_once('%')
            .and_then(|(_, rest)| rest.chars().next())
            .ok_or_else(|| malformed(format!("malformed sense key `{key}`")))?;
        let pos = pos_letter(ss_type).ok_or_else(|| malformed(format!("unknown synset type in `{key}`")))?;
        if offset.len() != 8 || !offset.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed(format!("invalid synset offset `{offset}`")));
        }
        let sense_number =
            sense_number.parse().map_err(|_| malformed(format!("invalid sense number `{sense_number}`")))?;
        let tag_count = tag_count.parse().map_err(|_| malformed(format!("invalid tag count `{tag_count}`")))?;
        if idx.by_key.contains_key(key) {
            return Err(IngestError::DuplicateSenseKey { line: lineno, key: key.to_string() });
        }
        let concept = format!("{offset}-{pos}");
        idx.by_concept.entry(concept.clone()).or_default().push(key.to_string());
        idx.by_key.insert(key.to_string(), SenseRecord { concept, sense_number, tag_count });
        idx.keys.push(key.to_string());
    }
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToSenseKeys,
    ToConcepts,
}

/// Rewrites key lines between namespaces.
///
/// Toward sense keys, a concept expands to every sense key of that concept
/// whose lemma matches the instance's lemma (all of them when the lemma is
/// not known). Unresolvable ids are dropped and counted; lines left empty
/// are dropped entirely.
pub fn map_predictions(
    lines: &[KeyLine],
    idx: &SenseIndex,
    direction: Direction,
    lemmas: &HashMap<String, String>,
) -> (Vec<KeyLine>, usize) {
    let mut dropped = 0;
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        let mut keys: Vec<String> = Vec::new();
        for id in &line.keys {
            let mapped: Vec<&str> = match direction {
                Direction::ToConcepts => idx.concept(id).into_iter().collect(),
                Direction::ToSenseKeys => {
                    let lemma = lemmas.get(&line.instance_id).map(|l| l.to_lowercase());
                    idx.sense_keys(id)
                        .iter()
                        .filter(|k| lemma.as_deref().is_none_or(|l| sense_key_lemma(k) == l))
                        .map(String::as_str)
                        .collect()
                }
            };
            if mapped.is_empty() {
                dropped += 1;
            }
            for m in mapped {
                if !keys.iter().any(|k| k == m) {
                    keys.push(m.to_string());
                }
            }
        }
        if !keys.is_empty() {
            out.push(KeyLine { instance_id: line.instance_id.clone(), keys });
        }
    }
    if dropped > 0 {
        log::warn!("{dropped} ids could not be mapped");
    }
    (out, dropped)
}

/// Instance id → lemma, for sense-key expansion.
pub fn instance_lemmas(docs: &[Document]) -> HashMap<String, String> {
    docs.iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter_map(|t| Some((t.instance_id.clone()?, t.lemma.clone())))
        .collect()
}
