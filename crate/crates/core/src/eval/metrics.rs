use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub auc: f64,
    pub ap: f64,
}

/// AUC as the Mann–Whitney statistic (ties earn half credit) and AP as the
/// step-wise sum of precision over recall increments, tied scores grouped.
pub fn ranking_metrics(scores: &[f64], labels: &[bool]) -> Result<RankingMetrics> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::Data(format!("ranking metrics need both classes ({p} positive, {n} negative)")));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // average 1-based ranks over tie groups, ascending
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += avg_rank * pos_in_group as f64;
        i = j + 1;
    }
    let (pf, nf) = (p as f64, n as f64);
    let auc = (pos_rank_sum - pf * (pf + 1.0) / 2.0) / (pf * nf);

    // descending thresholds for AP
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0;
    let mut k = order.len();
    while k > 0 {
        let mut start = k - 1;
        while start > 0 && scores[order[start - 1]] == scores[order[k - 1]] {
            start -= 1;
        }
        let group = &order[start..k];
        let pos_in_group = group.iter().filter(|&&g| labels[g]).count();
        tp += pos_in_group;
        seen += group.len();
        if pos_in_group > 0 {
            ap += (tp as f64 / seen as f64) * (pos_in_group as f64 / pf);
        }
        k = start;
    }
    Ok(RankingMetrics { auc, ap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

/// Support-weighted precision, recall and F1 over the classes present in
/// either vector (0 where a ratio is undefined), plus AUC when scores are
/// given and both classes occur.
pub fn classification_report(pred: &[usize], truth: &[usize], scores: Option<&[f64]>) -> Result<ClassificationReport> {
    if pred.is_empty() {
        return Err(Error::Data("classification report over no samples".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    let classes = pred.iter().chain(truth).copied().max().unwrap_or(0) + 1;
    let mut tp = vec![0usize; classes];
    let mut pred_count = vec![0usize; classes];
    let mut support = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        pred_count[p] += 1;
        support[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let total = truth.len() as f64;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for c in 0..classes {
        let w = support[c] as f64 / total;
        let pc = ratio(tp[c], pred_count[c]);
        let rc = ratio(tp[c], support[c]);
        let fc = if pc + rc > 0.0 { 2.0 * pc * rc / (pc + rc) } else { 0.0 };
        precision += w * pc;
        recall += w * rc;
        f1 += w * fc;
    }
    let auc = match scores {
        Some(s) => {
            let labels: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
            ranking_metrics(s, &labels).ok().map(|m| m.auc)
        }
        None => None,
    };
    Ok(ClassificationReport { precision, recall, f1, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config_hash: String,
    pub dataset_id: String,
    /// Latest event time in the dataset, so identical inputs give identical reports.
    pub timestamp: i64,
}

/// Named metrics with mean and spread, plus run metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: BTreeMap<String, MetricSummary>,
    pub meta: RunMeta,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<MetricSummary> {
        self.metrics.get(name).copied()
    }

    /// Summarizes per-fold classification reports; AUC is included when every
    /// fold produced one.
    pub fn from_folds(folds: &[ClassificationReport]) -> Self {
        let mut metrics = BTreeMap::new();
        let col = |f: fn(&ClassificationReport) -> f64| folds.iter().map(f).collect::<Vec<_>>();
        metrics.insert("precision".into(), MetricSummary::of(&col(|r| r.precision)));
        metrics.insert("recall".into(), MetricSummary::of(&col(|r| r.recall)));
        metrics.insert("f1".into(), MetricSummary::of(&col(|r| r.f1)));
        let aucs: Option<Vec<f64>> = folds.iter().map(|r| r.auc).collect();
        if let Some(aucs) = aucs {
            metrics.insert("auc".into(), MetricSummary::of(&aucs));
        }
        Self { metrics, meta: RunMeta::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        let m = ranking_metrics(&[0.9, 0.8, 0.3], &[true, true, false]).unwrap();
        assert_eq!((m.auc, m.ap), (1.0, 1.0));
    }

    #[test]
    fn ties_earn_half() {
        let m = ranking_metrics(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(m.auc, 0.5);
        assert_eq!(m.ap, 0.5);
        assert!(ranking_metrics(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn classification_cases() {
        let r = classification_report(&[0, 1, 1, 0], &[0, 1, 1, 0], None).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        let r = classification_report(&[1, 0, 1, 0], &[0, 1, 0, 1], None).unwrap();
        assert_eq!(r.f1, 0.0);
        // truth [0,0,0,1,1], pred [0,0,1,1,0]:
        // class 0: p=2/3, r=2/3; class 1: p=1/2, r=1/2; weights 3/5, 2/5
        let r = classification_report(&[0, 0, 1, 1, 0], &[0, 0, 0, 1, 1], None).unwrap();
        let expected = 0.6 * (2.0 / 3.0) + 0.4 * 0.5;
        assert!((r.precision - expected).abs() < 1e-15);
        assert!((r.f1 - expected).abs() < 1e-15);
        assert!(classification_report(&[], &[], None).is_err());
    }

    #[test]
    fn summary_uses_sample_std() {
        let s = MetricSummary::of(&[1.0, 1.0, 1.0]);
        assert_eq!((s.mean, s.std), (1.0, 0.0));
        let s = MetricSummary::of(&[1.0, 3.0]);
        assert_eq!(s.std, 2f64.sqrt());
    }
}
