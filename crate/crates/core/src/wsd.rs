//! Sense ranking by random walks over the knowledge base.
//!
//! Three strategies share the same building blocks:
//!
//! * `ppr`: one personalized PageRank per context window; every target in
//!   the window is read off the same rank vector.
//! * `ppr_w2w`: one personalized PageRank per target, with the target's own
//!   token left out of the personalization.
//! * `dfs`: extract the subgraph of paths joining senses of different
//!   context words, then run PageRank on it.
//!
//! Final sense scores mix the walk probabilities with the smoothed tagged
//! sense frequencies.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{extend_window_with, ContextWindow, Document, WindowPolicy, WindowToken};
use crate::kbgraph::Graph;
use crate::lexicon::{smoothed, Dictionary, LexiconError, SenseEntry};
use crate::pagerank::{personalized_pagerank, standard_pagerank, PageRankError, Personalization, PowerParams};
use crate::subgraph::{extract_subgraph, SubgraphError, SubgraphSpec, DEFAULT_MAX_PATH_LENGTH};

#[derive(Debug, Error, PartialEq)]
pub enum WsdError {
    #[error("no in-vocabulary context word has a sense in the graph")]
    NoContext,
    #[error("lambda {0} not in [0, 1]")]
    InvalidLambda(f64),
    #[error(transparent)]
    PageRank(#[from] PageRankError),
    #[error(transparent)]
    Subgraph(#[from] SubgraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ppr")]
    Ppr,
    #[serde(rename = "ppr_w2w")]
    PprW2w,
    #[serde(rename = "dfs")]
    Dfs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::PprW2w, Algorithm::Ppr, Algorithm::Dfs];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppr => "ppr",
            Algorithm::PprW2w => "ppr_w2w",
            Algorithm::Dfs => "dfs",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ppr" => Ok(Algorithm::Ppr),
            "ppr_w2w" => Ok(Algorithm::PprW2w),
            "dfs" => Ok(Algorithm::Dfs),
            _ => Err(format!("unknown algorithm `{s}` (expected ppr, ppr_w2w or dfs)")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which PageRank runs on an extracted subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgraphRank {
    #[default]
    Personalized,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WsdConfig {
    pub algorithm: Algorithm,
    pub use_frequencies: bool,
    /// With `use_frequencies`, split word mass across senses by frequency.
    pub freq_in_personalization: bool,
    /// With `use_frequencies`, mix frequencies into the final scores.
    pub freq_in_combination: bool,
    /// Weight of the frequency term in the final linear combination.
    pub lambda: f64,
    /// Minimum window size in words; 0 keeps the target sentence alone.
    pub min_context_words: usize,
    pub window: WindowPolicy,
    pub power: PowerParams,
    pub max_path_length: usize,
    pub subgraph_rank: SubgraphRank,
    /// Leave the target token out of its own personalization (ppr_w2w).
    pub exclude_target: bool,
}

impl Default for WsdConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::PprW2w,
            use_frequencies: true,
            freq_in_personalization: true,
            freq_in_combination: true,
            lambda: 0.5,
            min_context_words: 20,
            window: WindowPolicy::default(),
            power: PowerParams::default(),
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
            subgraph_rank: SubgraphRank::default(),
            exclude_target: true,
        }
    }
}

impl WsdConfig {
    pub fn validate(&self) -> Result<(), WsdError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(WsdError::InvalidLambda(self.lambda));
        }
        self.power.validate()?;
        if self.algorithm == Algorithm::Dfs && self.max_path_length == 0 {
            return Err(SubgraphError::ZeroPathLength.into());
        }
        Ok(())
    }

    fn freq_init(&self) -> bool {
        self.use_frequencies && self.freq_in_personalization
    }

    fn freq_mix(&self) -> bool {
        self.use_frequencies && self.freq_in_combination
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub instance_id: String,
    pub concept: String,
    pub score: f64,
    /// All candidates, best first.
    pub alternatives: Vec<(String, f64)>,
}

impl Prediction {
    fn from_ranking(instance_id: &str, ranking: Vec<(String, f64)>) -> Self {
        let (concept, score) = ranking[0].clone();
        Prediction { instance_id: instance_id.to_string(), concept, score, alternatives: ranking }
    }
}

/// Which token of the window to leave out, as (sentence, position).
pub type TokenRef = (usize, usize);

fn token_ref(t: &WindowToken<'_>) -> TokenRef {
    (t.sentence, t.position)
}

/// Teleport vector for a window: equal mass per in-vocabulary content
/// token, split across its senses, restricted to senses present in `g`.
pub fn build_personalization(
    window: &ContextWindow<'_>,
    dict: &Dictionary,
    g: &Graph,
    use_frequencies: bool,
    exclude: Option<TokenRef>,
) -> Result<Personalization, WsdError> {
    let words: Vec<&[SenseEntry]> = window
        .tokens
        .iter()
        .filter(|t| Some(token_ref(t)) != exclude)
        .filter_map(|t| t.token.headword())
        .filter_map(|hw| dict.senses(&hw).ok())
        .collect();
    if words.is_empty() {
        return Err(WsdError::NoContext);
    }
    let word_mass = 1.0 / words.len() as f64;
    let mut masses = Vec::new();
    for senses in words {
        let split = if use_frequencies { smoothed(senses) } else { vec![1.0 / senses.len() as f64; senses.len()] };
        for (s, share) in senses.iter().zip(split) {
            if let Some(v) = g.index_of(&s.concept) {
                masses.push((v, word_mass * share));
            }
        }
    }
    if masses.is_empty() {
        return Err(WsdError::NoContext);
    }
    Ok(Personalization::normalized(masses)?)
}

/// Ranks candidates by `lambda * freq + (1 - lambda) * walk`, with walk
/// scores renormalized over the candidates (uniform when all are zero).
/// Without frequencies the score is the renormalized walk alone. Ties keep
/// dictionary order.
pub fn combine_scores(
    candidates: &[SenseEntry],
    walk: &[f64],
    freq: &[f64],
    use_frequencies: bool,
    lambda: f64,
) -> Vec<(String, f64)> {
    assert!(!candidates.is_empty(), "no candidate senses");
    let k = candidates.len();
    let total: f64 = walk.iter().sum();
    let walk: Vec<f64> = if total > 0.0 { walk.iter().map(|w| w / total).collect() } else { vec![1.0 / k as f64; k] };
    let mut ranked: Vec<(String, f64)> = candidates
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let score = if use_frequencies { lambda * freq[i] + (1.0 - lambda) * walk[i] } else { walk[i] };
            (s.concept.clone(), score)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

/// Ranking used when the walk has nothing to say: smoothed frequencies,
/// whose argmax is the most frequent sense.
fn frequency_ranking(senses: &[SenseEntry]) -> Vec<(String, f64)> {
    let freq = smoothed(senses);
    let mut ranked: Vec<(String, f64)> = senses.iter().zip(freq).map(|(s, p)| (s.concept.clone(), p)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    ranked
}

struct Target<'w, 'd> {
    token: &'w WindowToken<'w>,
    instance_id: &'w str,
    senses: &'d [SenseEntry],
}

fn targets<'w, 'd>(window: &'w ContextWindow<'w>, dict: &'d Dictionary) -> Vec<Target<'w, 'd>> {
    window
        .targets()
        .filter_map(|t| {
            let senses = dict.senses(&t.token.headword()?).ok()?;
            Some(Target { token: t, instance_id: t.token.instance_id.as_deref()?, senses })
        })
        .collect()
}

fn score_target(target: &Target<'_, '_>, walk: impl Fn(&str) -> f64, cfg: &WsdConfig) -> Prediction {
    let walk: Vec<f64> = target.senses.iter().map(|s| walk(&s.concept)).collect();
    let freq = smoothed(target.senses);
    let ranking = combine_scores(target.senses, &walk, &freq, cfg.freq_mix(), cfg.lambda);
    Prediction::from_ranking(target.instance_id, ranking)
}

/// Prediction when no walk could be run: the most frequent sense when
/// frequencies are enabled, nothing otherwise. Monosemous words always get
/// their only sense.
fn fallback(target: &Target<'_, '_>, cfg: &WsdConfig) -> Option<Prediction> {
    if cfg.use_frequencies || target.senses.len() == 1 {
        Some(Prediction::from_ranking(target.instance_id, frequency_ranking(target.senses)))
    } else {
        None
    }
}

fn ranks_lookup<'a>(g: &'a Graph, ranks: &'a [f64]) -> impl Fn(&str) -> f64 + 'a {
    move |c| g.index_of(c).map_or(0.0, |v| ranks[v])
}

pub fn disambiguate_ppr(
    window: &ContextWindow<'_>,
    g: &Graph,
    dict: &Dictionary,
    cfg: &WsdConfig,
) -> Result<Vec<Prediction>, WsdError> {
    let targets = targets(window, dict);
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let v = match build_personalization(window, dict, g, cfg.freq_init(), None) {
        Ok(v) => v,
        Err(WsdError::NoContext) => return Ok(targets.iter().filter_map(|t| fallback(t, cfg)).collect()),
        Err(e) => return Err(e),
    };
    let ranks = personalized_pagerank(g, &v, &cfg.power)?;
    let lookup = ranks_lookup(g, &ranks.ranks);
    Ok(targets.iter().map(|t| score_target(t, &lookup, cfg)).collect())
}

pub fn disambiguate_ppr_w2w(
    window: &ContextWindow<'_>,
    g: &Graph,
    dict: &Dictionary,
    cfg: &WsdConfig,
) -> Result<Vec<Prediction>, WsdError> {
    let mut out = Vec::new();
    for t in targets(window, dict) {
        if t.senses.len() == 1 {
            out.extend(fallback(&t, cfg));
            continue;
        }
        let exclude = cfg.exclude_target.then(|| token_ref(t.token));
        let v = match build_personalization(window, dict, g, cfg.freq_init(), exclude) {
            Ok(v) => v,
            Err(WsdError::NoContext) => {
                out.extend(fallback(&t, cfg));
                continue;
            }
            Err(e) => return Err(e),
        };
        let ranks = personalized_pagerank(g, &v, &cfg.power)?;
        out.push(score_target(&t, ranks_lookup(g, &ranks.ranks), cfg));
    }
    Ok(out)
}

pub fn disambiguate_dfs(
    window: &ContextWindow<'_>,
    g: &Graph,
    dict: &Dictionary,
    cfg: &WsdConfig,
) -> Result<Vec<Prediction>, WsdError> {
    let targets = targets(window, dict);
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    // one seed group per distinct headword, in window order
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for t in &window.tokens {
        let Some(hw) = t.token.headword() else { continue };
        let Ok(senses) = dict.senses(&hw) else { continue };
        if seen.insert(hw) {
            groups.push(senses.iter().map(|s| s.concept.clone()).collect());
        }
    }
    let spec = SubgraphSpec { seeds: groups, max_path_length: cfg.max_path_length };
    let sub = match extract_subgraph(g, &spec) {
        Ok(sub) => sub,
        Err(SubgraphError::AllSeedsMissing) => return Ok(targets.iter().filter_map(|t| fallback(t, cfg)).collect()),
        Err(e) => return Err(e.into()),
    };
    let ranks = match cfg.subgraph_rank {
        SubgraphRank::Personalized => {
            let v = build_personalization(window, dict, &sub.graph, cfg.freq_init(), None)?;
            personalized_pagerank(&sub.graph, &v, &cfg.power)?
        }
        SubgraphRank::Standard => standard_pagerank(&sub.graph, &cfg.power)?,
    };
    let lookup = ranks_lookup(&sub.graph, &ranks.ranks);
    Ok(targets.iter().map(|t| score_target(t, &lookup, cfg)).collect())
}

pub fn disambiguate(
    window: &ContextWindow<'_>,
    g: &Graph,
    dict: &Dictionary,
    cfg: &WsdConfig,
) -> Result<Vec<Prediction>, WsdError> {
    match cfg.algorithm {
        Algorithm::Ppr => disambiguate_ppr(window, g, dict, cfg),
        Algorithm::PprW2w => disambiguate_ppr_w2w(window, g, dict, cfg),
        Algorithm::Dfs => disambiguate_dfs(window, g, dict, cfg),
    }
}

/// Sentences holding at least one target, as (document, sentence) pairs.
fn work_units(docs: &[Document]) -> Vec<(usize, usize)> {
    docs.iter()
        .enumerate()
        .flat_map(|(di, d)| {
            d.sentences
                .iter()
                .enumerate()
                .filter(|(_, s)| s.tokens.iter().any(|t| t.instance_id.is_some()))
                .map(move |(si, _)| (di, si))
        })
        .collect()
}

/// Disambiguates every target of the corpus. Work is spread over the
/// current rayon pool; output is sorted by instance id.
pub fn disambiguate_corpus(
    docs: &[Document],
    g: &Graph,
    dict: &Dictionary,
    cfg: &WsdConfig,
) -> Result<Vec<Prediction>, WsdError> {
    cfg.validate()?;
    let units = work_units(docs);
    let per_unit: Result<Vec<Vec<Prediction>>, WsdError> = units
        .par_iter()
        .map(|&(di, si)| {
            let window = extend_window_with(&docs[di], si, cfg.min_context_words, cfg.window);
            disambiguate(&window, g, dict, cfg)
        })
        .collect();
    let mut preds: Vec<Prediction> = per_unit?.into_iter().flatten().collect();
    preds.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(preds)
}

/// Most-frequent-sense baseline over every in-vocabulary target.
pub fn mfs_corpus(docs: &[Document], dict: &Dictionary) -> Vec<Prediction> {
    let mut preds: Vec<Prediction> = docs
        .iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter_map(|t| {
            let id = t.instance_id.as_deref()?;
            let senses = dict.senses(&t.headword()?).ok()?;
            Some(Prediction::from_ranking(id, frequency_ranking(senses)))
        })
        .collect();
    preds.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    preds
}

/// Out-of-vocabulary lookups are reported, not fatal.
pub fn count_oov(docs: &[Document], dict: &Dictionary) -> usize {
    docs.iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter(|t| t.instance_id.is_some())
        .filter(|t| t.headword().is_none_or(|hw| matches!(dict.senses(&hw), Err(LexiconError::OutOfVocabulary(_)))))
        .count()
}

/// Prediction file lines: `<instance_id> <concept> [<concept> ...]`, best first.
pub fn write_predictions(preds: &[Prediction]) -> String {
    let mut out = String::new();
    for p in preds {
        out.push_str(&p.instance_id);
        for (c, _) in &p.alternatives {
            out.push(' ');
            out.push_str(c);
        }
        out.push('\n');
    }
    out
}
