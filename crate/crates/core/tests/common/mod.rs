//! Test-only oracles. They work from raw edge lists and never touch the
//! library's graph internals.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Directed edge list over vertices `0..n`, named `v0`, `v1`, ...
#[derive(Debug, Clone)]
pub struct RawGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl RawGraph {
    /// Relation-file text declaring every edge as directed. A zero-weight
    /// self-loop is emitted first for each vertex so that indices follow
    /// vertex numbers.
    pub fn to_relation_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.n {
            out.push_str(&format!("u:v{v} v:v{v} w:0 d:1\n"));
        }
        for &(s, t, w) in &self.edges {
            out.push_str(&format!("u:v{s} v:v{t} w:{w:?} d:1\n"));
        }
        out
    }

    pub fn scaled(&self, c: f64) -> RawGraph {
        RawGraph { n: self.n, edges: self.edges.iter().map(|&(s, t, w)| (s, t, w * c)).collect() }
    }

    fn weights(&self) -> HashMap<(usize, usize), f64> {
        let mut m = HashMap::new();
        for &(s, t, w) in &self.edges {
            *m.entry((s, t)).or_insert(0.0) += w;
        }
        m
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph on `n` vertices with edge probability `p` and
/// weights in (0, 5]; some vertices end up dangling.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> RawGraph {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if rng.gen_bool(p) {
                edges.push((s, t, rng.gen_range(0.01..5.0)));
            }
        }
    }
    RawGraph { n, edges }
}

/// Random sparse personalization over `0..n` summing to one.
pub fn random_personalization(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, f64)> {
    let k = rng.gen_range(1..=n);
    let mut masses: Vec<(usize, f64)> = (0..k).map(|_| (rng.gen_range(0..n), rng.gen_range(0.01..1.0))).collect();
    let total: f64 = masses.iter().map(|m| m.1).sum();
    for m in &mut masses {
        m.1 /= total;
    }
    masses
}

/// Dense power iteration with an explicit column-stochastic matrix.
/// Dangling columns (zero out-weight) are replaced by `redistribute`.
pub fn dense_ppr(
    g: &RawGraph,
    v: &[f64],
    redistribute: &[f64],
    start: &[f64],
    damping: f64,
    iterations: usize,
) -> Vec<f64> {
    let n = g.n;
    let w = g.weights();
    let mut out = vec![0.0; n];
    for (&(s, _), &x) in &w {
        out[s] += x;
    }
    let mut m = vec![vec![0.0; n]; n];
    for s in 0..n {
        for t in 0..n {
            m[t][s] = if out[s] > 0.0 { w.get(&(s, t)).copied().unwrap_or(0.0) / out[s] } else { redistribute[t] };
        }
    }
    let mut p = start.to_vec();
    for _ in 0..iterations {
        p = (0..n).map(|t| (1.0 - damping) * v[t] + damping * (0..n).map(|s| m[t][s] * p[s]).sum::<f64>()).collect();
    }
    p
}

pub fn dense(entries: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(i, m) in entries {
        v[i] += m;
    }
    v
}

/// Vertices on some simple directed path of 1..=max_len edges whose
/// endpoints are seeds of different words, plus all seeds. Exhaustive.
pub fn path_oracle(g: &RawGraph, words: &[Vec<usize>], max_len: usize) -> BTreeSet<usize> {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.n];
    for &(s, t, _) in &g.edges {
        adj[s].insert(t);
    }
    let mut owner: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for (w, seeds) in words.iter().enumerate() {
        for &s in seeds {
            owner.entry(s).or_default().insert(w);
        }
    }
    let mut keep: BTreeSet<usize> = owner.keys().copied().collect();
    let mut stack: Vec<Vec<usize>> = (0..g.n).map(|v| vec![v]).collect();
    while let Some(path) = stack.pop() {
        if path.len() > 1 {
            let (a, b) = (owner.get(&path[0]), owner.get(path.last().unwrap()));
            if let (Some(a), Some(b)) = (a, b) {
                if a.iter().any(|x| b.iter().any(|y| x != y)) {
                    keep.extend(path.iter().copied());
                }
            }
        }
        if path.len() - 1 < max_len {
            for &t in &adj[*path.last().unwrap()] {
                if !path.contains(&t) {
                    let mut next = path.clone();
                    next.push(t);
                    stack.push(next);
                }
            }
        }
    }
    keep
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}
