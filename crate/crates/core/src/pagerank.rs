//! Power-iteration PageRank, standard and personalized.
//!
//! One iteration computes
//!
//! ```text
//! p' = (1 - d) * v + d * (P^T p + m * r)
//! ```
//!
//! where `P` is the row-normalized transition matrix, `m` the rank mass
//! sitting on dangling vertices and `r` the dangling redistribution vector
//! (the personalization `v` by default). Accumulation runs over source
//! vertices in index order, so results are bit-reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kbgraph::Graph;

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PageRankError {
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("personalization references vertex {0} outside the graph")]
    UnknownVertex(usize),
    #[error("invalid personalization: {0}")]
    InvalidPersonalization(String),
    #[error("invalid power-method parameters: {0}")]
    InvalidParams(String),
}

/// Where rank mass stuck on dangling vertices goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DanglingPolicy {
    #[default]
    Personalization,
    Uniform,
}

/// Initial rank vector of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartVector {
    #[default]
    Personalization,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub damping: f64,
    pub max_iterations: usize,
    /// Stop early once the L1 change between iterates drops below this.
    pub early_exit_l1: Option<f64>,
    pub dangling: DanglingPolicy,
    pub start: StartVector,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            max_iterations: 30,
            early_exit_l1: None,
            dangling: DanglingPolicy::default(),
            start: StartVector::default(),
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), PageRankError> {
        if !(0.0..=1.0).contains(&self.damping) {
            return Err(PageRankError::InvalidParams(format!("damping {} not in [0, 1]", self.damping)));
        }
        if self.max_iterations == 0 {
            return Err(PageRankError::InvalidParams("max_iterations must be positive".into()));
        }
        if let Some(eps) = self.early_exit_l1 {
            if eps.is_nan() || eps < 0.0 {
                return Err(PageRankError::InvalidParams(format!("early_exit_l1 {eps} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Sparse teleport distribution over vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Personalization {
    entries: Vec<(usize, f64)>,
}

impl Personalization {
    /// Validates a distribution whose masses already sum to one.
    /// Duplicate indices are summed.
    pub fn new(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, PageRankError> {
        let entries = merge(entries)?;
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(PageRankError::InvalidPersonalization(format!("total mass {total} is not 1")));
        }
        Ok(Self { entries })
    }

    /// Rescales arbitrary non-negative masses to sum to one.
    pub fn normalized(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, PageRankError> {
        let mut entries = merge(entries)?;
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total <= 0.0 {
            return Err(PageRankError::InvalidPersonalization("total mass is zero".into()));
        }
        for e in &mut entries {
            e.1 /= total;
        }
        Ok(Self { entries })
    }

    pub fn uniform(n: usize) -> Result<Self, PageRankError> {
        if n == 0 {
            return Err(PageRankError::EmptyGraph);
        }
        let mass = 1.0 / n as f64;
        Ok(Self { entries: (0..n).map(|i| (i, mass)).collect() })
    }

    /// Entries sorted by vertex index.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for &(i, m) in &self.entries {
            v[i] += m;
        }
        v
    }
}

fn merge(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Vec<(usize, f64)>, PageRankError> {
    let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
    for &(i, m) in &entries {
        if !m.is_finite() || m < 0.0 {
            return Err(PageRankError::InvalidPersonalization(format!("mass {m} at vertex {i}")));
        }
    }
    entries.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (i, m) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == i => last.1 += m,
            _ => merged.push((i, m)),
        }
    }
    if merged.is_empty() {
        return Err(PageRankError::InvalidPersonalization("no entries".into()));
    }
    Ok(merged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    pub ranks: Vec<f64>,
    pub iterations_run: usize,
}

impl RankVector {
    pub fn get(&self, v: usize) -> f64 {
        self.ranks[v]
    }
}

/// Step-wise power iteration over a borrowed graph.
pub struct PowerMethod<'g> {
    graph: &'g Graph,
    damping: f64,
    teleport: Vec<f64>,
    dangling_to: Vec<f64>,
    current: Vec<f64>,
    next: Vec<f64>,
    iterations: usize,
}

impl<'g> PowerMethod<'g> {
    pub fn new(graph: &'g Graph, v: &Personalization, params: &PowerParams) -> Result<Self, PageRankError> {
        params.validate()?;
        let n = graph.vertex_count();
        if n == 0 {
            return Err(PageRankError::EmptyGraph);
        }
        if let Some(&(i, _)) = v.entries().iter().find(|e| e.0 >= n) {
            return Err(PageRankError::UnknownVertex(i));
        }
        let teleport = v.to_dense(n);
        let uniform = || vec![1.0 / n as f64; n];
        let dangling_to = match params.dangling {
            DanglingPolicy::Personalization => teleport.clone(),
            DanglingPolicy::Uniform => uniform(),
        };
        let current = match params.start {
            StartVector::Personalization => teleport.clone(),
            StartVector::Uniform => uniform(),
        };
        Ok(Self { graph, damping: params.damping, teleport, dangling_to, current, next: vec![0.0; n], iterations: 0 })
    }

    /// Runs one iteration and returns the L1 change.
    pub fn step(&mut self) -> f64 {
        let g = self.graph;
        let d = self.damping;
        let n = g.vertex_count();
        let dangling_mass: f64 = (0..n).filter(|&v| g.is_dangling(v)).map(|v| self.current[v]).sum();
        for t in 0..n {
            self.next[t] = (1.0 - d) * self.teleport[t] + d * dangling_mass * self.dangling_to[t];
        }
        for s in 0..n {
            let mass = self.current[s];
            if mass == 0.0 || g.is_dangling(s) {
                continue;
            }
            let share = d * mass;
            for (t, prob) in g.transitions(s) {
                self.next[t] += share * prob;
            }
        }
        let delta = self.current.iter().zip(&self.next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut self.current, &mut self.next);
        self.iterations += 1;
        delta
    }

    pub fn ranks(&self) -> &[f64] {
        &self.current
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn into_rank_vector(self) -> RankVector {
        RankVector { ranks: self.current, iterations_run: self.iterations }
    }
}

pub fn personalized_pagerank(
    g: &Graph,
    v: &Personalization,
    params: &PowerParams,
) -> Result<RankVector, PageRankError> {
    let mut pm = PowerMethod::new(g, v, params)?;
    for _ in 0..params.max_iterations {
        let delta = pm.step();
        if params.early_exit_l1.is_some_and(|eps| delta < eps) {
            break;
        }
    }
    Ok(pm.into_rank_vector())
}

pub fn standard_pagerank(g: &Graph, params: &PowerParams) -> Result<RankVector, PageRankError> {
    let v = Personalization::uniform(g.vertex_count())?;
    personalized_pagerank(g, &v, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbgraph::load_relations;

    fn graph(text: &str) -> Graph {
        load_relations(text.as_bytes(), false).unwrap().0
    }

    #[test]
    fn two_cycle_uniform() {
        let g = graph("u:a v:b\n");
        let r = standard_pagerank(&g, &PowerParams::default()).unwrap();
        assert_eq!(r.ranks, vec![0.5, 0.5]);
        assert_eq!(r.iterations_run, 30);
    }

    #[test]
    fn zero_damping_returns_personalization() {
        let g = graph("u:a v:b\nu:b v:c\nu:c v:d d:1\n");
        let v = Personalization::new([(0, 0.25), (2, 0.75)]).unwrap();
        let params = PowerParams { damping: 0.0, ..Default::default() };
        let r = personalized_pagerank(&g, &v, &params).unwrap();
        assert_eq!(r.ranks, vec![0.25, 0.0, 0.75, 0.0]);
    }

    #[test]
    fn single_vertex() {
        let g = graph("u:a v:a w:0 d:1\n");
        let r = standard_pagerank(&g, &PowerParams::default()).unwrap();
        assert_eq!(r.ranks, vec![1.0]);
    }

    #[test]
    fn regular_graph_is_uniform() {
        let g = graph("u:a v:b\nu:b v:c\nu:c v:d\nu:d v:a\n");
        let r = standard_pagerank(&g, &PowerParams::default()).unwrap();
        for x in r.ranks {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn early_exit() {
        let g = graph("u:a v:b\n");
        let params = PowerParams { early_exit_l1: Some(1e-9), ..Default::default() };
        let r = standard_pagerank(&g, &params).unwrap();
        assert_eq!(r.iterations_run, 1);
    }

    #[test]
    fn validation() {
        let g = graph("u:a v:b\n");
        let v = Personalization::new([(5, 1.0)]).unwrap();
        assert_eq!(personalized_pagerank(&g, &v, &PowerParams::default()), Err(PageRankError::UnknownVertex(5)));
        assert!(Personalization::new([(0, 0.5)]).is_err());
        assert!(Personalization::new([(0, -0.5), (1, 1.5)]).is_err());
        assert!(Personalization::normalized([(0, 0.0)]).is_err());
        let bad = PowerParams { damping: 1.5, ..Default::default() };
        assert!(standard_pagerank(&g, &bad).is_err());
        let bad = PowerParams { max_iterations: 0, ..Default::default() };
        assert!(standard_pagerank(&g, &bad).is_err());
    }

    #[test]
    fn personalization_merges_duplicates() {
        let v = Personalization::normalized([(3, 1.0), (1, 1.0), (3, 2.0)]).unwrap();
        assert_eq!(v.entries(), &[(1, 0.25), (3, 0.75)]);
    }
}
