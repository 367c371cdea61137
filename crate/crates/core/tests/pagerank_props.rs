mod common;

use common::{dense, dense_ppr, random_graph, random_personalization, rng, RawGraph};
use kbwsd::pagerank::{DanglingPolicy, PowerMethod, StartVector};
use kbwsd::{load_relations, personalized_pagerank, standard_pagerank, Graph, Personalization, PowerParams};
use proptest::prelude::*;
use rand::Rng;

fn load(g: &RawGraph) -> Graph {
    load_relations(g.to_relation_text().as_bytes(), false).unwrap().0
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn chain_matches_frozen_dense_values() {
    // a <-> b <-> c, teleport to a, 30 iterations (numpy dense power method)
    let g = load_relations("u:a v:b\nu:b v:c\n".as_bytes(), false).unwrap().0;
    let v = Personalization::new([(0, 1.0)]).unwrap();
    let r = personalized_pagerank(&g, &v, &PowerParams::default()).unwrap();
    let expected = [0.3470232826096138, 0.4559534347807723, 0.1970232826096138];
    assert!(linf(&r.ranks, &expected) <= 1e-12, "{:?}", r.ranks);
}

#[test]
fn star_matches_frozen_dense_values() {
    let g = load_relations("u:hub v:l1\nu:hub v:l2\nu:hub v:l3\n".as_bytes(), false).unwrap().0;
    let r = standard_pagerank(&g, &PowerParams::default()).unwrap();
    let expected = [0.47797671739038616, 0.17400776086987124, 0.17400776086987124, 0.17400776086987124];
    assert!(linf(&r.ranks, &expected) <= 1e-12, "{:?}", r.ranks);
    assert!(r.ranks[1..].iter().all(|&leaf| r.ranks[0] > leaf));
}

#[test]
fn alternative_dangling_and_start_rules_match_oracle() {
    let mut rng = rng(7);
    for _ in 0..50 {
        let raw = random_graph(&mut rng, 8, 0.2);
        let g = load(&raw);
        let v = Personalization::normalized(random_personalization(&mut rng, 8)).unwrap();
        let vd = dense(v.entries(), 8);
        let uniform = vec![1.0 / 8.0; 8];
        for (dangling, start) in [
            (DanglingPolicy::Uniform, StartVector::Personalization),
            (DanglingPolicy::Personalization, StartVector::Uniform),
            (DanglingPolicy::Uniform, StartVector::Uniform),
        ] {
            let params = PowerParams { dangling, start, ..Default::default() };
            let r = personalized_pagerank(&g, &v, &params).unwrap();
            let red = if dangling == DanglingPolicy::Uniform { &uniform } else { &vd };
            let st = if start == StartVector::Uniform { &uniform } else { &vd };
            let oracle = dense_ppr(&raw, &vd, red, st, 0.85, 30);
            assert!(linf(&r.ranks, &oracle) <= 1e-10);
        }
    }
}

#[test]
fn regular_graph_uniform() {
    // 3-regular: the cube
    let cube =
        "u:0 v:1\nu:1 v:3\nu:3 v:2\nu:2 v:0\nu:4 v:5\nu:5 v:7\nu:7 v:6\nu:6 v:4\nu:0 v:4\nu:1 v:5\nu:2 v:6\nu:3 v:7\n";
    let g = load_relations(cube.as_bytes(), false).unwrap().0;
    let r = standard_pagerank(&g, &PowerParams::default()).unwrap();
    assert!(r.ranks.iter().all(|&x| (x - 0.125).abs() < 1e-15));
}

#[test]
fn empty_graph_is_rejected() {
    assert!(Personalization::uniform(0).is_err());
}

fn instance() -> impl Strategy<Value = (RawGraph, Vec<(usize, f64)>, f64)> {
    (2usize..=12, any::<u64>(), 0.0f64..=1.0).prop_map(|(n, seed, d)| {
        let mut r = rng(seed);
        let p = r.gen_range(0.05..0.6);
        let g = random_graph(&mut r, n, p);
        let v = random_personalization(&mut r, n);
        (g, v, d)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_dense_oracle((raw, v, d) in instance()) {
        let g = load(&raw);
        let v = Personalization::normalized(v).unwrap();
        let params = PowerParams { damping: d, ..Default::default() };
        let r = personalized_pagerank(&g, &v, &params).unwrap();
        let vd = dense(v.entries(), raw.n);
        let oracle = dense_ppr(&raw, &vd, &vd, &vd, d, 30);
        prop_assert!(linf(&r.ranks, &oracle) <= 1e-10);
    }

    #[test]
    fn mass_is_conserved_every_iteration((raw, v, d) in instance()) {
        let g = load(&raw);
        let v = Personalization::normalized(v).unwrap();
        let params = PowerParams { damping: d, ..Default::default() };
        let mut pm = PowerMethod::new(&g, &v, &params).unwrap();
        for _ in 0..30 {
            pm.step();
            let total: f64 = pm.ranks().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
            prop_assert!(pm.ranks().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn zero_damping_is_pure_teleport((raw, v, _d) in instance()) {
        let g = load(&raw);
        let v = Personalization::normalized(v).unwrap();
        let params = PowerParams { damping: 0.0, ..Default::default() };
        let r = personalized_pagerank(&g, &v, &params).unwrap();
        prop_assert!(linf(&r.ranks, &dense(v.entries(), raw.n)) <= 1e-15);
    }

    #[test]
    fn deterministic((raw, v, d) in instance()) {
        let v = Personalization::normalized(v).unwrap();
        let params = PowerParams { damping: d, ..Default::default() };
        let a = personalized_pagerank(&load(&raw), &v, &params).unwrap();
        let b = personalized_pagerank(&load(&raw), &v, &params).unwrap();
        prop_assert_eq!(a.ranks.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.ranks.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn edge_weight_scale_invariance((raw, v, d) in instance(), c in 0.001f64..1000.0) {
        let v = Personalization::normalized(v).unwrap();
        let params = PowerParams { damping: d, ..Default::default() };
        let a = personalized_pagerank(&load(&raw), &v, &params).unwrap();
        let b = personalized_pagerank(&load(&raw.scaled(c)), &v, &params).unwrap();
        prop_assert!(linf(&a.ranks, &b.ranks) <= 1e-12);
    }
}
