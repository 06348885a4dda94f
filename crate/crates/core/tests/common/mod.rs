#![allow(dead_code)]

use std::sync::Arc;

use coordnet::forecast::ForecastData;
use coordnet::graph::{partition_snapshots, resolve_labels, NodeIndex, SECONDS_PER_DAY};
use coordnet::ingest::{extract_edges, ExtractRules};
use coordnet::synth::{generate_campaign, Campaign, CampaignConfig};

/// A few hundred users over 40 days.
pub fn small_campaign(seed: u64) -> Campaign {
    let cfg = CampaignConfig {
        n_users: 300,
        n_trolls: 20,
        duration_days: 40,
        troll_cluster_count: 2,
        benign_rate: 120.0,
        seed,
        ..CampaignConfig::default_small()
    };
    generate_campaign(&cfg).unwrap()
}

/// Forecasting data for `campaign` with `days`-day snapshots anchored at
/// midnight before the first edge.
pub fn forecast_data(campaign: &Campaign, days: i64) -> Arc<ForecastData> {
    let ex = extract_edges(&campaign.records, &ExtractRules { include_mentions: true, same_subreddit_only: false });
    let index = Arc::new(NodeIndex::new(campaign.labels.keys().cloned()));
    let (labels, _) = resolve_labels(&index, &campaign.labels);
    let t0 = ex.edges.iter().map(|e| e.timestamp).min().unwrap();
    let start = t0 - t0.rem_euclid(SECONDS_PER_DAY);
    let tg = partition_snapshots(&ex.edges, index, Arc::new(labels), days * SECONDS_PER_DAY, start).unwrap();
    Arc::new(ForecastData::new(tg).unwrap())
}
