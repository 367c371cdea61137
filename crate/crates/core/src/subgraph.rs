//! Per-context subgraph extraction.
//!
//! The subgraph keeps every seed (candidate sense of a context word) plus
//! every vertex on a simple directed path of at most `max_path_length`
//! edges that joins seeds of two different context words. Edges are those
//! of the full graph induced on the kept vertices.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::kbgraph::Graph;

pub const DEFAULT_MAX_PATH_LENGTH: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum SubgraphError {
    #[error("no seed vertex is present in the graph")]
    AllSeedsMissing,
    #[error("max_path_length must be positive")]
    ZeroPathLength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphSpec {
    /// Candidate concepts, grouped by context word.
    pub seeds: Vec<Vec<String>>,
    pub max_path_length: usize,
}

#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: Graph,
    /// Full-graph index of each subgraph vertex; sorted ascending.
    pub vertices: Vec<usize>,
    pub skipped_seeds: Vec<String>,
}

/// Context words each seed vertex belongs to.
type SeedWords = HashMap<usize, BTreeSet<usize>>;

/// Whether a path from `from` to `to` joins two different context words.
fn joins_words(words: &SeedWords, from: usize, to: usize) -> bool {
    match (words.get(&from), words.get(&to)) {
        (Some(a), Some(b)) => from != to && a.iter().any(|x| b.iter().any(|y| x != y)),
        _ => false,
    }
}

/// Hop distance from every vertex to the nearest of `sources`, up to `limit`.
fn distances_to(g: &Graph, sources: impl Iterator<Item = usize>, limit: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    for s in sources {
        if dist.insert(s, 0).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == limit {
            continue;
        }
        for u in g.in_neighbors(v) {
            dist.entry(u).or_insert_with(|| {
                queue.push_back(u);
                d + 1
            });
        }
    }
    dist
}

struct Search<'a> {
    graph: &'a Graph,
    words: &'a SeedWords,
    max_len: usize,
    on_path: Vec<bool>,
    path: Vec<usize>,
    kept: Vec<bool>,
}

impl Search<'_> {
    fn run(&mut self, origin: usize, bound: &HashMap<usize, usize>) {
        self.path.clear();
        self.path.push(origin);
        self.on_path[origin] = true;
        self.descend(origin, bound);
        self.on_path[origin] = false;
    }

    fn descend(&mut self, v: usize, bound: &HashMap<usize, usize>) {
        let origin = self.path[0];
        let depth = self.path.len() - 1;
        if depth > 0 && joins_words(self.words, origin, v) {
            for &p in &self.path {
                self.kept[p] = true;
            }
        }
        if depth == self.max_len {
            return;
        }
        let budget = self.max_len - depth - 1;
        for (u, _) in self.graph.neighbors(v) {
            if self.on_path[u] || bound.get(&u).is_none_or(|&d| d > budget) {
                continue;
            }
            self.on_path[u] = true;
            self.path.push(u);
            self.descend(u, bound);
            self.path.pop();
            self.on_path[u] = false;
        }
    }
}

pub fn extract_subgraph(g: &Graph, spec: &SubgraphSpec) -> Result<Subgraph, SubgraphError> {
    if spec.max_path_length == 0 {
        return Err(SubgraphError::ZeroPathLength);
    }
    let mut words: SeedWords = HashMap::new();
    let mut skipped_seeds = Vec::new();
    for (w, concepts) in spec.seeds.iter().enumerate() {
        for c in concepts {
            match g.index_of(c) {
                Some(v) => {
                    words.entry(v).or_default().insert(w);
                }
                None => skipped_seeds.push(c.clone()),
            }
        }
    }
    if words.is_empty() {
        return Err(SubgraphError::AllSeedsMissing);
    }
    if !skipped_seeds.is_empty() {
        log::warn!("{} seed concepts missing from the graph", skipped_seeds.len());
    }

    let mut origins: Vec<usize> = words.keys().copied().collect();
    origins.sort_unstable();

    // Lower bounds on the distance to a seed that would close a valid path,
    // keyed by the single word an origin belongs to (None: several words).
    let mut bounds: HashMap<Option<usize>, HashMap<usize, usize>> = HashMap::new();
    let class = |v: usize| {
        let ws = &words[&v];
        (ws.len() == 1).then(|| *ws.first().unwrap())
    };

    let n = g.vertex_count();
    let mut search = Search {
        graph: g,
        words: &words,
        max_len: spec.max_path_length,
        on_path: vec![false; n],
        path: Vec::new(),
        kept: vec![false; n],
    };
    for &origin in &origins {
        let key = class(origin);
        let bound = bounds.entry(key).or_insert_with(|| {
            let sources = origins.iter().copied().filter(|&t| match key {
                Some(w) => words[&t].iter().any(|&x| x != w),
                None => true,
            });
            distances_to(g, sources, spec.max_path_length)
        });
        search.run(origin, bound);
    }

    let mut kept = search.kept;
    for &v in &origins {
        kept[v] = true;
    }
    let vertices: Vec<usize> = (0..n).filter(|&v| kept[v]).collect();
    Ok(Subgraph { graph: g.induced(&vertices), vertices, skipped_seeds })
}
