mod oracles;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use coordnet::baselines::kfold_indices;
use coordnet::eval::ba_augment;
use coordnet::graph::Label;
use coordnet::ingest::{extract_edges, ExtractRules, UserLabel};
use coordnet::seed::rng_from_seed;
use coordnet::synth::{generate_campaign, CampaignConfig};
use proptest::prelude::*;
use rand::Rng as _;

use oracles::{graph_of, random_pairs};

/// 1-degree-of-freedom χ² critical value at p = 0.01.
const CHI2_1DF_P01: f64 = 6.635;

#[test]
fn attachment_prefers_the_hub() {
    let n = 201;
    let mut pairs: Vec<(u32, u32)> = (1..151).map(|v| (0, v)).collect();
    pairs.push((199, 200));
    let mut labels = vec![Label::Benign; n];
    labels[200] = Label::Troll;
    let g = graph_of(n, &pairs, labels);
    let benign: Vec<u32> = (0..200).collect();
    let out = ba_augment(&g, &benign, 10_000, 1, &mut rng_from_seed(9)).unwrap();
    let hub = out.added.iter().filter(|&&(_, t)| t == 0).count() as f64;
    let total = out.added.len() as f64;
    // a uniform choice among the 199 nodes other than the source
    let expected = total / 199.0;
    let chi2 = (hub - expected).powi(2) / expected + (hub - expected).powi(2) / (total - expected);
    assert!(hub > expected && chi2 > CHI2_1DF_P01, "hub {hub} expected {expected} chi2 {chi2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn augmentation_only_adds_benign_edges(seed in any::<u64>(), n in 4usize..40, k in 0usize..200, m in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let pairs = random_pairs(&mut rng, n, 2 * n);
        let labels: Vec<Label> = (0..n).map(|i| if i % 4 == 0 { Label::Troll } else { Label::Benign }).collect();
        let benign: Vec<u32> = (0..n as u32).filter(|v| v % 4 != 0).collect();
        let g = graph_of(n, &pairs, labels);
        let out = ba_augment(&g, &benign, k, m, &mut rng).unwrap();
        prop_assert_eq!(out.graph.edge_count(), g.edge_count() + k as u64);
        prop_assert_eq!(out.added.len(), k);
        for &(u, v) in &out.added {
            prop_assert!(u % 4 != 0 && v % 4 != 0 && u != v);
        }
        for (u, v, w) in g.edges() {
            let after = out.graph.out_adj().entries(u).find(|&(x, _)| x == v).map_or(0, |e| e.1);
            prop_assert!(after >= w);
        }
        if k == 0 {
            prop_assert_eq!(&out.graph, &g);
        }
    }

    #[test]
    fn folds_are_stratified(seed in any::<u64>(), n in 20usize..300, k in 2usize..11, p in 0.1f64..0.5) {
        let mut rng = rng_from_seed(seed);
        let mut labels: Vec<usize> = (0..n).map(|_| usize::from(rng.random_bool(p))).collect();
        for l in labels.iter_mut().take(k) {
            *l = 1;
        }
        for l in labels.iter_mut().skip(k).take(k) {
            *l = 0;
        }
        let folds = kfold_indices(&labels, k, seed).unwrap();
        let mut seen: Vec<usize> = folds.concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        for class in 0..2 {
            let total = labels.iter().filter(|&&l| l == class).count() as f64;
            for f in &folds {
                let got = f.iter().filter(|&&i| labels[i] == class).count() as f64;
                prop_assert!((got - total / k as f64).abs() <= 1.0, "class {} fold count {} share {}", class, got, total / k as f64);
            }
        }
    }
}

#[test]
fn intra_cluster_rate_matches_multiplier() {
    let cfg = CampaignConfig::default_small();
    let c = generate_campaign(&cfg).unwrap();
    let edges = extract_edges(&c.records, &ExtractRules::default()).edges;
    let cluster_of: HashMap<&str, usize> =
        c.clusters.iter().enumerate().flat_map(|(k, m)| m.iter().map(move |u| (u.as_str(), k))).collect();
    let troll = |u: &str| c.labels.get(u) == Some(&UserLabel::Troll);
    let (mut intra, mut benign) = (0usize, 0usize);
    for e in &edges {
        match (cluster_of.get(e.source.as_str()), cluster_of.get(e.target.as_str())) {
            (Some(a), Some(b)) if a == b => intra += 1,
            _ if !troll(&e.source) && !troll(&e.target) => benign += 1,
            _ => {}
        }
    }
    let pairs = |s: usize| (s * s.saturating_sub(1) / 2) as f64;
    let intra_pairs: f64 = c.clusters.iter().map(|m| pairs(m.len())).sum();
    let nb = cfg.n_users - cfg.n_trolls;
    let days = f64::from(cfg.duration_days);
    let ratio = (intra as f64 / intra_pairs / days) / (benign as f64 / pairs(nb) / days);
    assert!((ratio / cfg.intra_multiplier - 1.0).abs() <= 0.10, "measured multiplier {ratio}");
}

#[test]
fn every_troll_interacts_within_its_cluster() {
    for seed in [1, 7, 13] {
        let cfg = CampaignConfig { seed, ..CampaignConfig::planted() };
        let c = generate_campaign(&cfg).unwrap();
        // mention interactions count as cluster interactions too
        let rules = ExtractRules { include_mentions: true, ..ExtractRules::default() };
        let edges = extract_edges(&c.records, &rules).edges;
        let cluster_of: HashMap<&str, usize> =
            c.clusters.iter().enumerate().flat_map(|(k, m)| m.iter().map(move |u| (u.as_str(), k))).collect();
        let mut active = BTreeSet::new();
        for e in &edges {
            if let (Some(a), Some(b)) = (cluster_of.get(e.source.as_str()), cluster_of.get(e.target.as_str())) {
                if a == b {
                    active.insert(e.source.as_str());
                    active.insert(e.target.as_str());
                }
            }
        }
        let trolls: BTreeSet<&str> = c.trolls().collect();
        let missing: Vec<_> = trolls.difference(&active).collect();
        assert!(missing.is_empty(), "seed {seed}: {missing:?}");
        assert!(active.is_subset(&trolls));
        assert!(c.records.windows(2).all(|w| w[0].created_at <= w[1].created_at));
    }
}

#[test]
fn campaign_without_trolls_is_benign() {
    let cfg = CampaignConfig { n_users: 200, n_trolls: 0, duration_days: 10, benign_rate: 50.0, ..CampaignConfig::default_small() };
    let c = generate_campaign(&cfg).unwrap();
    assert!(c.labels.values().all(|l| *l == UserLabel::Benign));
    let counts: BTreeMap<_, usize> = c.labels.values().fold(BTreeMap::new(), |mut m, l| {
        *m.entry(format!("{l:?}")).or_default() += 1;
        m
    });
    assert_eq!(counts.len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn extraction_is_bounded_and_deterministic(seed in any::<u64>(), x in any::<bool>()) {
        let platform = if x { coordnet::ingest::Platform::X } else { coordnet::ingest::Platform::Reddit };
        let cfg = CampaignConfig {
            platform,
            n_users: 80,
            n_trolls: 8,
            troll_cluster_count: 2,
            duration_days: 5,
            benign_rate: 30.0,
            seed,
            ..CampaignConfig::default_small()
        };
        let c = generate_campaign(&cfg).unwrap();
        let rules = ExtractRules { include_mentions: true, ..ExtractRules::default() };
        let a = extract_edges(&c.records, &rules);
        let b = extract_edges(&c.records, &rules);
        prop_assert_eq!(&a.edges, &b.edges);
        let max_mentions = c.records.iter().map(|r| r.mentioned_authors.len()).max().unwrap_or(0);
        prop_assert!(a.edges.len() <= c.records.len() * (1 + max_mentions));
        prop_assert!(a.edges.iter().all(|e| e.source != e.target));
    }
}
