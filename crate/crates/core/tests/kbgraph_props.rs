mod common;

use std::collections::HashMap;

use common::{random_graph, rng, RawGraph};
use kbwsd::load_relations;
use proptest::prelude::*;

fn undirected_text(g: &RawGraph) -> String {
    g.edges.iter().map(|(s, t, w)| format!("u:v{s} v:v{t} w:{w:?}\n")).collect()
}

#[test]
fn duplicate_merge_matches_naive_accumulation() {
    let mut r = rng(11);
    for _ in 0..50 {
        let mut g = random_graph(&mut r, 6, 0.4);
        let copy = g.edges.clone();
        g.edges.extend(copy.iter().take(3));
        let text = undirected_text(&g);
        let (graph, _) = load_relations(text.as_bytes(), false).unwrap();
        let mut naive: HashMap<(String, String), f64> = HashMap::new();
        for &(s, t, w) in &g.edges {
            *naive.entry((format!("v{s}"), format!("v{t}"))).or_default() += w;
            if s != t {
                *naive.entry((format!("v{t}"), format!("v{s}"))).or_default() += w;
            }
        }
        assert_eq!(graph.edge_count(), naive.len());
        for e in graph.edges() {
            let expected = naive[&(e.source.to_string(), e.target.to_string())];
            assert!((e.weight - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}

fn raw_graph() -> impl Strategy<Value = RawGraph> {
    (1usize..=12, any::<u64>(), 0.05f64..0.7).prop_map(|(n, seed, p)| {
        let mut g = random_graph(&mut rng(seed), n, p);
        if g.edges.is_empty() {
            g.edges.push((0, 0, 1.0));
        }
        g
    })
}

proptest! {
    #[test]
    fn transition_rows_sum_to_one(g in raw_graph()) {
        let (graph, _) = load_relations(g.to_relation_text().as_bytes(), false).unwrap();
        for id in graph.ids() {
            let row = graph.transition_row(id).unwrap();
            if !row.is_empty() {
                let total: f64 = row.iter().map(|e| e.1).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transition_rows_scale_invariant(g in raw_graph(), c in 0.001f64..1000.0) {
        let (a, _) = load_relations(g.to_relation_text().as_bytes(), false).unwrap();
        let (b, _) = load_relations(g.scaled(c).to_relation_text().as_bytes(), false).unwrap();
        for id in a.ids() {
            let (ra, rb) = (a.transition_row(id).unwrap(), b.transition_row(id).unwrap());
            prop_assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(&rb) {
                prop_assert_eq!(x.0, y.0);
                prop_assert!((x.1 - y.1).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn load_is_deterministic(g in raw_graph()) {
        let text = undirected_text(&g);
        let (a, sa) = load_relations(text.as_bytes(), false).unwrap();
        let (b, sb) = load_relations(text.as_bytes(), false).unwrap();
        prop_assert_eq!(a.ids(), b.ids());
        prop_assert_eq!(a.to_relation_lines(), b.to_relation_lines());
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn canonical_lines_round_trip(g in raw_graph()) {
        let (a, _) = load_relations(undirected_text(&g).as_bytes(), false).unwrap();
        let canonical = a.to_relation_lines();
        let (b, _) = load_relations(canonical.as_bytes(), false).unwrap();
        prop_assert!(a == b);
        prop_assert_eq!(b.to_relation_lines().len(), canonical.len());
    }
}
