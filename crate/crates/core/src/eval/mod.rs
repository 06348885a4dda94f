//! Ranking and classification metrics, benign-noise augmentation, and the
//! detection experiments built on them (cross-validated comparison,
//! robustness sweep, feature-group ablation).

mod ba;
mod metrics;
pub mod pipeline;

pub(crate) use ba::Fenwick;
pub use ba::{ba_augment, BaOutcome};
pub use metrics::{
    classification_report, ranking_metrics, ClassificationReport, EvalReport, MetricSummary, RankingMetrics, RunMeta,
};
