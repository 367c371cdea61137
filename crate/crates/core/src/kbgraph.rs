//! Knowledge-base graph: loading relation files into an immutable CSR
//! adjacency structure with precomputed transition probabilities.
//!
//! Relation lines look like `u:00001740-n v:00002137-n [w:1.5] [d:1] [s:wn30g]`.
//! Undirected lines (the default) expand into two directed edges of equal
//! weight. Duplicate `(source, target)` pairs are merged by summing weights.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: negative edge weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("relation input contains no edges")]
    Empty,
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const NO_TAG: u32 = u32::MAX;

/// Load-time statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GraphStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    /// Vertices with zero total out-weight.
    pub dangling_count: usize,
    /// Relation lines that merged into an already present directed edge.
    pub duplicate_merged_count: usize,
    pub self_loop_count: usize,
    pub unknown_key_count: usize,
}

/// One directed edge as seen through [`Graph::edges`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<'a> {
    pub source: &'a str,
    pub target: &'a str,
    pub weight: f64,
    pub provenance: Option<&'a str>,
}

/// Immutable weighted directed graph over opaque string vertex ids.
///
/// Vertex indices are dense and assigned in order of first appearance.
/// Out-edges of every vertex are stored sorted by target index.
#[derive(Debug, Clone)]
pub struct Graph {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    /// `weights[e] / out_weight[source(e)]`, or 0 for dangling sources.
    probs: Vec<f64>,
    tags: Vec<u32>,
    tag_names: Vec<String>,
    out_weight: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

/// Accumulates directed edges and freezes them into a [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    edges: HashMap<(u32, u32), usize>,
    edge_list: Vec<(u32, u32, f64, u32)>,
    tag_names: Vec<String>,
    tag_index: HashMap<String, u32>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `id`, returning its dense index.
    pub fn vertex(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i as usize;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i as usize
    }

    fn tag(&mut self, tag: Option<&str>) -> u32 {
        match tag {
            None => NO_TAG,
            Some(t) => {
                if let Some(&i) = self.tag_index.get(t) {
                    return i;
                }
                let i = self.tag_names.len() as u32;
                self.tag_names.push(t.to_string());
                self.tag_index.insert(t.to_string(), i);
                i
            }
        }
    }

    /// Adds a directed edge. Returns `true` when it merged into an existing one.
    pub fn add_edge(&mut self, source: usize, target: usize, weight: f64, tag: Option<&str>) -> bool {
        let (s, t) = (source as u32, target as u32);
        match self.edges.get(&(s, t)) {
            Some(&pos) => {
                self.edge_list[pos].2 += weight;
                true
            }
            None => {
                let tag = self.tag(tag);
                self.edges.insert((s, t), self.edge_list.len());
                self.edge_list.push((s, t, weight, tag));
                false
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn build(self) -> Graph {
        let n = self.ids.len();
        let mut edge_list = self.edge_list;
        edge_list.sort_by_key(|&(s, t, _, _)| (s, t));

        let mut offsets = vec![0usize; n + 1];
        for &(s, _, _, _) in &edge_list {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets: Vec<u32> = edge_list.iter().map(|e| e.1).collect();
        let weights: Vec<f64> = edge_list.iter().map(|e| e.2).collect();
        let tags: Vec<u32> = edge_list.iter().map(|e| e.3).collect();

        let mut out_weight = vec![0.0; n];
        let mut probs = vec![0.0; weights.len()];
        for v in 0..n {
            let range = offsets[v]..offsets[v + 1];
            let total: f64 = weights[range.clone()].iter().sum();
            out_weight[v] = total;
            if total > 0.0 {
                for e in range {
                    probs[e] = weights[e] / total;
                }
            }
        }

        let mut in_offsets = vec![0usize; n + 1];
        for &t in &targets {
            in_offsets[t as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut fill = in_offsets.clone();
        let mut in_sources = vec![0u32; targets.len()];
        for v in 0..n {
            for &t in &targets[offsets[v]..offsets[v + 1]] {
                in_sources[fill[t as usize]] = v as u32;
                fill[t as usize] += 1;
            }
        }

        Graph {
            ids: self.ids,
            index: self.index,
            offsets,
            targets,
            weights,
            probs,
            tags,
            tag_names: self.tag_names,
            out_weight,
            in_offsets,
            in_sources,
        }
    }
}

fn parse_line<'a>(
    line: &'a str,
    lineno: usize,
    unknown_keys: &mut usize,
) -> Result<Option<RelationLine<'a>>, GraphError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let malformed = |msg: String| GraphError::Malformed { line: lineno, msg };
    let mut rel = RelationLine { source: None, target: None, weight: 1.0, directed: None, tag: None };
    for field in trimmed.split_whitespace() {
        let (key, value) =
            field.split_once(':').ok_or_else(|| malformed(format!("field `{field}` is not key:value")))?;
        match key {
            "u" => rel.source = Some(value),
            "v" => rel.target = Some(value),
            "w" => {
                let w: f64 = value.parse().map_err(|_| malformed(format!("invalid weight `{value}`")))?;
                if !w.is_finite() {
                    return Err(malformed(format!("non-finite weight `{value}`")));
                }
                if w < 0.0 {
                    return Err(GraphError::NegativeWeight { line: lineno, weight: w });
                }
                rel.weight = w;
            }
            "d" => {
                rel.directed = match value {
                    "1" => Some(true),
                    "0" => Some(false),
                    _ => return Err(malformed(format!("invalid direction flag `{value}`"))),
                }
            }
            "s" => rel.tag = Some(value),
            _ => *unknown_keys += 1,
        }
    }
    match (rel.source, rel.target) {
        (Some(u), Some(v)) if !u.is_empty() && !v.is_empty() => Ok(Some(rel)),
        _ => Err(malformed("missing u: or v: field".to_string())),
    }
}

struct RelationLine<'a> {
    source: Option<&'a str>,
    target: Option<&'a str>,
    weight: f64,
    directed: Option<bool>,
    tag: Option<&'a str>,
}

/// Loads a relation file.
///
/// `directed_default` flips the interpretation of lines without a `d:` field.
pub fn load_relations<R: BufRead>(reader: R, directed_default: bool) -> Result<(Graph, GraphStats), GraphError> {
    let mut builder = GraphBuilder::new();
    let mut stats = GraphStats::default();
    let mut buf = String::new();
    let mut reader = reader;
    let mut lineno = 0;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        lineno += 1;
        let Some(rel) = parse_line(&buf, lineno, &mut stats.unknown_key_count)? else {
            continue;
        };
        let directed = rel.directed.unwrap_or(directed_default);
        let (u, v) = (rel.source.unwrap(), rel.target.unwrap());
        let s = builder.vertex(u);
        let t = builder.vertex(v);
        let mut merged = builder.add_edge(s, t, rel.weight, rel.tag);
        // an undirected self-loop is a single edge
        if !directed && s != t {
            merged |= builder.add_edge(t, s, rel.weight, rel.tag);
        }
        if merged {
            stats.duplicate_merged_count += 1;
        }
    }
    if builder.edge_list.is_empty() {
        return Err(GraphError::Empty);
    }
    let graph = builder.build();
    stats.vertex_count = graph.vertex_count();
    stats.edge_count = graph.edge_count();
    stats.dangling_count = (0..graph.vertex_count()).filter(|&v| graph.is_dangling(v)).count();
    stats.self_loop_count = graph.edges().filter(|e| e.source == e.target).count();
    if stats.unknown_key_count > 0 {
        log::warn!("ignored {} unknown relation fields", stats.unknown_key_count);
    }
    Ok((graph, stats))
}

impl Graph {
    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn out_weight(&self, v: usize) -> f64 {
        self.out_weight[v]
    }

    pub fn is_dangling(&self, v: usize) -> bool {
        self.out_weight[v] <= 0.0
    }

    /// Out-neighbors of `v` as `(target, weight)`, sorted by target index.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()].iter().zip(&self.weights[range]).map(|(&t, &w)| (t as usize, w))
    }

    /// Out-neighbors of `v` with their transition probabilities.
    pub fn transitions(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()].iter().zip(&self.probs[range]).map(|(&t, &p)| (t as usize, p))
    }

    /// Sources of edges pointing at `v`, in index order.
    pub fn in_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]].iter().map(|&s| s as usize)
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Transition distribution out of vertex `id`: each neighbor's share of
    /// the total out-weight. Empty for dangling vertices.
    pub fn transition_row(&self, id: &str) -> Result<Vec<(&str, f64)>, GraphError> {
        let v = self.index_of(id).ok_or_else(|| GraphError::UnknownVertex(id.to_string()))?;
        if self.is_dangling(v) {
            return Ok(Vec::new());
        }
        Ok(self.transitions(v).filter(|&(_, p)| p > 0.0).map(|(t, p)| (self.id(t), p)).collect())
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge<'_>> + '_ {
        (0..self.vertex_count()).flat_map(move |v| {
            (self.offsets[v]..self.offsets[v + 1]).map(move |e| Edge {
                source: &self.ids[v],
                target: &self.ids[self.targets[e] as usize],
                weight: self.weights[e],
                provenance: match self.tags[e] {
                    NO_TAG => None,
                    t => Some(self.tag_names[t as usize].as_str()),
                },
            })
        })
    }

    /// Induced subgraph on `vertices` (full-graph indices), keeping the
    /// given order as the new dense indexing.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut builder = GraphBuilder::new();
        for &v in vertices {
            builder.vertex(&self.ids[v]);
        }
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for (i, &v) in vertices.iter().enumerate() {
            for e in self.offsets[v]..self.offsets[v + 1] {
                if let Some(&j) = local.get(&(self.targets[e] as usize)) {
                    let tag = match self.tags[e] {
                        NO_TAG => None,
                        t => Some(self.tag_names[t as usize].as_str()),
                    };
                    builder.add_edge(i, j, self.weights[e], tag);
                }
            }
        }
        builder.build()
    }

    /// Canonical relation lines: one directed line per edge, sources in
    /// index order, targets in index order.
    pub fn to_relation_lines(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            write!(out, "u:{} v:{} w:{} d:1", e.source, e.target, e.weight).unwrap();
            if let Some(tag) = e.provenance {
                write!(out, " s:{tag}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Two graphs are equal when they have the same vertex ids and the same
/// weighted, tagged edges, regardless of internal index assignment.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        if self.vertex_count() != other.vertex_count() || self.edge_count() != other.edge_count() {
            return false;
        }
        let key = |g: &Graph| {
            let mut edges: Vec<(String, String, u64, Option<String>)> = g
                .edges()
                .map(|e| {
                    (e.source.to_string(), e.target.to_string(), e.weight.to_bits(), e.provenance.map(str::to_string))
                })
                .collect();
            edges.sort();
            let mut ids = g.ids.clone();
            ids.sort();
            (ids, edges)
        };
        key(self) == key(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> (Graph, GraphStats) {
        load_relations(text.as_bytes(), false).unwrap()
    }

    #[test]
    fn undirected_default_expands() {
        let (g, stats) = load("u:a v:b\n");
        assert_eq!(stats.vertex_count, 2);
        assert_eq!(stats.edge_count, 2);
        let edges: Vec<_> = g.edges().map(|e| (e.source, e.target, e.weight)).collect();
        assert_eq!(edges, vec![("a", "b", 1.0), ("b", "a", 1.0)]);
    }

    #[test]
    fn directed_flag() {
        let (g, stats) = load("u:a v:b w:2 d:1\n");
        assert_eq!(stats.vertex_count, 2);
        assert_eq!(stats.edge_count, 1);
        assert_eq!(stats.dangling_count, 1);
        let e = g.edges().next().unwrap();
        assert_eq!((e.source, e.target, e.weight), ("a", "b", 2.0));
    }

    #[test]
    fn directed_default_can_be_flipped() {
        let (g, _) = load_relations("u:a v:b\nu:b v:c d:0\n".as_bytes(), true).unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn duplicates_merge_by_sum() {
        let (g, stats) = load("u:a v:b\nu:a v:b\n");
        assert_eq!(stats.duplicate_merged_count, 1);
        assert_eq!(g.edge_count(), 2);
        for e in g.edges() {
            assert_eq!(e.weight, 2.0);
        }
    }

    #[test]
    fn comments_blank_lines_and_unknown_keys() {
        let (g, stats) = load("# header\n\nu:a v:b t:hyp i:hyp s:wn30\n");
        assert_eq!(g.edge_count(), 2);
        assert_eq!(stats.unknown_key_count, 2);
        assert_eq!(g.edges().next().unwrap().provenance, Some("wn30"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = load_relations("u:a v:b\nu:a\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Malformed { line: 2, .. }), "{err}");
        let err = load_relations("u:a v:b w:-1\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::NegativeWeight { line: 1, .. }));
        let err = load_relations("u:a v:b junk\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Malformed { line: 1, .. }));
        let err = load_relations("u:a v:b w:x\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, GraphError::Malformed { line: 1, .. }));
        assert!(matches!(load_relations("# nothing\n".as_bytes(), false), Err(GraphError::Empty)));
        assert!(matches!(load_relations("".as_bytes(), false), Err(GraphError::Empty)));
    }

    #[test]
    fn self_loops_are_counted() {
        let (g, stats) = load("u:a v:a\nu:a v:b\n");
        assert_eq!(stats.self_loop_count, 1);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn transition_rows() {
        let (g, _) = load("u:a v:b d:1\nu:a v:c d:1\n");
        assert_eq!(g.transition_row("a").unwrap(), vec![("b", 0.5), ("c", 0.5)]);
        let (g, _) = load("u:a v:b w:2 d:1\nu:a v:c w:6 d:1\n");
        assert_eq!(g.transition_row("a").unwrap(), vec![("b", 0.25), ("c", 0.75)]);
        assert!(g.transition_row("b").unwrap().is_empty());
        assert!(matches!(g.transition_row("zz"), Err(GraphError::UnknownVertex(_))));
    }

    #[test]
    fn zero_weight_edges_leave_vertex_dangling() {
        let (g, stats) = load("u:a v:b w:0 d:1\nu:b v:a d:1\n");
        assert_eq!(stats.dangling_count, 1);
        assert!(g.transition_row("a").unwrap().is_empty());
    }

    #[test]
    fn first_appearance_indexing() {
        let (g, _) = load("u:c v:a\nu:b v:a\n");
        assert_eq!(g.ids(), &["c", "a", "b"]);
        assert_eq!(g.neighbors(1).collect::<Vec<_>>(), vec![(0, 1.0), (2, 1.0)]);
    }

    #[test]
    fn induced_keeps_internal_edges_only() {
        let (g, _) = load("u:a v:b\nu:b v:c\nu:c v:d\n");
        let sub = g.induced(&[1, 2]);
        assert_eq!(sub.ids(), &["b", "c"]);
        assert_eq!(sub.edge_count(), 2);
    }

    #[test]
    fn reverse_adjacency() {
        let (g, _) = load("u:a v:b d:1\nu:c v:b d:1\nu:b v:a d:1\n");
        assert_eq!(g.in_neighbors(1).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.in_neighbors(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(g.in_neighbors(2).count(), 0);
    }
}
