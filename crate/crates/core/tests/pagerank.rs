mod oracles;

use coordnet::baselines::{pagerank, PageRankConfig};
use coordnet::seed::rng_from_seed;
use proptest::prelude::*;
use rand::Rng as _;

use oracles::{dense_pagerank, random_pairs, unlabeled_graph};

fn check(n: usize, pairs: &[(u32, u32)]) {
    let g = unlabeled_graph(n, pairs);
    let cfg = PageRankConfig::default();
    let got = pagerank(&g, &cfg).unwrap();
    let want = dense_pagerank(n, pairs, cfg.damping);
    let total: f64 = got.iter().sum();
    assert!((total - 1.0).abs() <= 1e-9, "sum {total}");
    for (v, (a, b)) in got.iter().zip(&want).enumerate() {
        assert!(*a >= 0.0);
        assert!((a - b).abs() <= 1e-8, "node {v}: {a} vs {b}");
    }
}

#[test]
fn matches_dense_oracle_on_50_graphs() {
    let mut rng = rng_from_seed(2);
    for _ in 0..50 {
        let n = rng.random_range(1..=500);
        let m = rng.random_range(0..=4 * n);
        let pairs = random_pairs(&mut rng, n, m);
        check(n, &pairs);
    }
}

#[test]
fn star_pointing_at_center() {
    // leaves act on the center: edges (center, leaf)
    let pairs = [(0, 1), (0, 2), (0, 3)];
    check(4, &pairs);
    let g = unlabeled_graph(4, &pairs);
    let pr = pagerank(&g, &PageRankConfig::default()).unwrap();
    // center mass c satisfies c = 0.15/4 + 0.85 (c/4 + 3 l), l = 0.15/4 + 0.85 c/4
    let c = (0.15 / 4.0 + 0.85 * 3.0 * 0.15 / 4.0) / (1.0 - 0.85 / 4.0 - 0.85 * 3.0 * 0.85 / 4.0);
    assert!((pr[0] - c).abs() < 1e-9, "{} vs {c}", pr[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scores_form_a_fixed_point(n in 1usize..60, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let m = rng.random_range(0..3 * n);
        let pairs = random_pairs(&mut rng, n, m);
        let g = unlabeled_graph(n, &pairs);
        let pr = pagerank(&g, &PageRankConfig::default()).unwrap();
        let next = dense_step(n, &pairs, &pr);
        let change: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(change < 1e-9);
    }
}

fn dense_step(n: usize, pairs: &[(u32, u32)], r: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(_, v) in pairs {
        out[v as usize] += 1.0;
    }
    let dangling: f64 = (0..n).filter(|&v| out[v] == 0.0).map(|v| r[v]).sum();
    let mut next = vec![0.15 / n as f64 + 0.85 * dangling / n as f64; n];
    for &(u, v) in pairs {
        next[u as usize] += 0.85 * r[v as usize] / out[v as usize];
    }
    next
}
