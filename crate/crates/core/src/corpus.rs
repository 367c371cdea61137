//! Documents, sentences and tokens, plus context-window selection.
//!
//! Corpus files are line oriented: `<doc id=d001>` opens a document,
//! `<sent id=d001.s001>` a sentence, and every other non-blank line is a
//! token. Token lines carry five tab-separated fields: surface, lemma, POS
//! (`n`, `v`, `a`, `r` or anything else for non-content words), instance id
//! (`-` when absent) and a target flag that must agree with the instance id.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub fn from_tag(tag: &str) -> Pos {
        match tag {
            "n" => Pos::Noun,
            "v" => Pos::Verb,
            "a" => Pos::Adj,
            "r" => Pos::Adv,
            _ => Pos::Other,
        }
    }

    /// WordNet POS letter, `None` for non-content words.
    pub fn letter(self) -> Option<char> {
        match self {
            Pos::Noun => Some('n'),
            Pos::Verb => Some('v'),
            Pos::Adj => Some('a'),
            Pos::Adv => Some('r'),
            Pos::Other => None,
        }
    }

    pub fn is_content(self) -> bool {
        self != Pos::Other
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.letter() {
            Some(c) => write!(f, "{c}"),
            None => f.write_str("x"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    /// Present iff the token is a disambiguation target.
    pub instance_id: Option<String>,
}

impl Token {
    pub fn is_content(&self) -> bool {
        self.pos.is_content()
    }

    /// Dictionary headword (`lemma#pos`) for content tokens.
    pub fn headword(&self) -> Option<String> {
        self.pos.letter().map(|p| crate::lexicon::headword(&self.lemma, p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn content_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_content()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn instance_count(&self) -> usize {
        self.sentences.iter().flat_map(|s| &s.tokens).filter(|t| t.instance_id.is_some()).count()
    }
}

fn directive_id(line: &str, tag: &str) -> Option<String> {
    let rest = line.strip_prefix('<')?.strip_suffix('>')?;
    let rest = rest.strip_prefix(tag)?.trim_start();
    let id = rest.strip_prefix("id=")?.trim();
    let id = id.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(id);
    (!id.is_empty() && !id.contains(char::is_whitespace)).then(|| id.to_string())
}

pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut sent_ids: HashSet<String> = HashSet::new();
    let mut open_sentence_line = 0;

    fn close(docs: &mut [Document], line: usize) -> Result<(), CorpusError> {
        if let Some(s) = docs.last().and_then(|d| d.sentences.last()) {
            if s.tokens.is_empty() {
                return Err(CorpusError::Malformed { line, msg: format!("sentence `{}` is empty", s.id) });
            }
        }
        Ok(())
    }

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let malformed = |msg: String| CorpusError::Malformed { line: lineno, msg };
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with('<') {
            let trimmed = line.trim();
            if let Some(id) = directive_id(trimmed, "doc") {
                close(&mut docs, open_sentence_line)?;
                sent_ids.clear();
                docs.push(Document { id, sentences: Vec::new() });
            } else if let Some(id) = directive_id(trimmed, "sent") {
                close(&mut docs, open_sentence_line)?;
                let doc = docs.last_mut().ok_or_else(|| malformed("sentence outside a document".into()))?;
                if !sent_ids.insert(id.clone()) {
                    return Err(malformed(format!("duplicate sentence id `{id}` in document `{}`", doc.id)));
                }
                doc.sentences.push(Sentence { id, tokens: Vec::new() });
                open_sentence_line = lineno;
            } else {
                return Err(malformed(format!("unknown directive `{trimmed}`")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(malformed(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let pos = Pos::from_tag(fields[2]);
        let instance_id = match fields[3] {
            "-" => None,
            "" => return Err(malformed("empty instance id".into())),
            id => Some(id.to_string()),
        };
        match (fields[4], &instance_id) {
            ("1", Some(_)) | ("0", None) => {}
            ("0" | "1", _) => return Err(malformed("target flag disagrees with instance id".into())),
            (flag, _) => return Err(malformed(format!("invalid target flag `{flag}`"))),
        }
        if instance_id.is_some() && !pos.is_content() {
            return Err(malformed(format!("instance with non-content POS `{}`", fields[2])));
        }
        let sentence = docs
            .last_mut()
            .and_then(|d| d.sentences.last_mut())
            .ok_or_else(|| malformed("token outside a sentence".into()))?;
        sentence.tokens.push(Token { surface: fields[0].to_string(), lemma: fields[1].to_string(), pos, instance_id });
    }
    close(&mut docs, open_sentence_line)?;
    Ok(docs)
}

/// Canonical corpus text: unquoted ids, no blank lines, non-content POS as `x`.
pub fn write_corpus(docs: &[Document]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&format!("<doc id={}>\n", d.id));
        for s in &d.sentences {
            out.push_str(&format!("<sent id={}>\n", s.id));
            for t in &s.tokens {
                let (id, flag) = match &t.instance_id {
                    Some(id) => (id.as_str(), '1'),
                    None => ("-", '0'),
                };
                out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", t.surface, t.lemma, t.pos, id, flag));
            }
        }
    }
    out
}

/// Order in which neighbor sentences are tried while extending a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionOrder {
    #[default]
    FollowingFirst,
    PreviousFirst,
}

/// What counts toward the minimum window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordCount {
    #[default]
    Content,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub order: ExtensionOrder,
    pub count: WordCount,
}

/// A content token inside a window, with its document position.
#[derive(Debug, Clone, Copy)]
pub struct WindowToken<'a> {
    pub sentence: usize,
    pub position: usize,
    pub token: &'a Token,
}

#[derive(Debug, Clone)]
pub struct ContextWindow<'a> {
    pub tokens: Vec<WindowToken<'a>>,
    pub target_sentence: usize,
    /// Inclusive sentence index range.
    pub span: (usize, usize),
}

impl<'a> ContextWindow<'a> {
    /// Target instances of the target sentence, in order.
    pub fn targets(&self) -> impl Iterator<Item = &WindowToken<'a>> {
        self.tokens.iter().filter(move |t| t.sentence == self.target_sentence && t.token.instance_id.is_some())
    }
}

pub fn extend_window(doc: &Document, target_sentence: usize, min_words: usize) -> ContextWindow<'_> {
    extend_window_with(doc, target_sentence, min_words, WindowPolicy::default())
}

/// Grows a window around `target_sentence` one neighbor sentence at a
/// time, alternating sides, until it holds `min_words` words or the
/// document runs out.
///
/// Panics if `target_sentence` is out of range.
pub fn extend_window_with(
    doc: &Document,
    target_sentence: usize,
    min_words: usize,
    policy: WindowPolicy,
) -> ContextWindow<'_> {
    let sentences = &doc.sentences;
    assert!(target_sentence < sentences.len(), "target sentence out of range");
    let words = |i: usize| match policy.count {
        WordCount::Content => sentences[i].content_count(),
        WordCount::All => sentences[i].tokens.len(),
    };
    let (mut first, mut last) = (target_sentence, target_sentence);
    let mut count = words(target_sentence);
    let mut take_following = policy.order == ExtensionOrder::FollowingFirst;
    while count < min_words {
        let can_follow = last + 1 < sentences.len();
        let can_precede = first > 0;
        if !can_follow && !can_precede {
            break;
        }
        if (take_following && can_follow) || !can_precede {
            last += 1;
            count += words(last);
        } else {
            first -= 1;
            count += words(first);
        }
        take_following = !take_following;
    }
    let tokens = (first..=last)
        .flat_map(|si| {
            sentences[si].tokens.iter().enumerate().filter(|(_, t)| t.is_content()).map(move |(ti, t)| WindowToken {
                sentence: si,
                position: ti,
                token: t,
            })
        })
        .collect();
    ContextWindow { tokens, target_sentence, span: (first, last) }
}
