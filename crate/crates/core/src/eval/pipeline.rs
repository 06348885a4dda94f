//! Troll-detection experiments over one interaction graph: cross-validated
//! GraphSAGE detection and its baselines, a benign-noise sweep, and
//! feature-group ablation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::{cross_validate, pagerank, CvOutcome, ForestConfig, ForestModel, PageRankConfig, TabularTable};
use crate::error::{Error, Result};
use crate::features::{detection_features, FeatureMatrix, Standardizer};
use crate::graph::{Graph, Label};
use crate::nn::{sigmoid, Tensor};
use crate::sage::{extract_embeddings, gather_rows, sage_forward, train_detector, DetectConfig};
use crate::seed::{derive_seed, stream_rng};

use super::{ba_augment, MetricSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Downstream {
    /// Random forest on the encoder's hidden representation.
    Forest,
    /// The detector's own linear head.
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    pub folds: usize,
    pub sage: DetectConfig,
    pub forest: ForestConfig,
    pub downstream: Downstream,
    /// Attachments per source in benign-noise augmentation.
    pub ba_m: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { folds: 10, sage: DetectConfig::default(), forest: ForestConfig::default(), downstream: Downstream::Forest, ba_m: 2 }
    }
}

/// Labeled nodes (troll or benign) in id order with their 0/1 targets.
pub fn labeled_nodes(graph: &Graph) -> (Vec<usize>, Vec<usize>) {
    (0..graph.node_count())
        .filter(|&v| graph.label(v as u32) != Label::Unknown)
        .map(|v| (v, usize::from(graph.label(v as u32).is_troll())))
        .unzip()
}

/// Topology features with `ln(1 + x)` on every column, z-scored over all nodes.
pub fn topology_input(graph: &Graph) -> FeatureMatrix {
    let mut m = detection_features(graph);
    for r in 0..m.rows() {
        m.row_mut(r).iter_mut().for_each(|x| *x = x.ln_1p());
    }
    standardize_all(&mut m);
    m
}

/// Z-scores every column over all rows.
pub fn standardize_all(m: &mut FeatureMatrix) {
    let rows: Vec<usize> = (0..m.rows()).collect();
    let s = Standardizer::fit(m, &rows, 0..m.width());
    s.apply(m);
}

/// Copy with the named groups' columns set to zero.
pub fn mask_groups(m: &FeatureMatrix, groups: &[&str]) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    let mut cols = Vec::new();
    for g in groups {
        let group = m.group(g).ok_or_else(|| Error::Config(format!("unknown feature group {g:?}")))?;
        cols.extend(group.range());
    }
    if m.groups().iter().all(|g| groups.contains(&g.name.as_str())) {
        return Err(Error::Config("ablation would remove every feature group".into()));
    }
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        cols.iter().for_each(|&c| row[c] = 0.0);
    }
    Ok(out)
}

fn to_rows(t: &Tensor<f32>, nodes: &[usize]) -> Vec<Vec<f64>> {
    nodes.iter().map(|&v| t.row(v).iter().map(|&x| f64::from(x)).collect()).collect()
}

fn forest_predict(x: &[Vec<f64>], y: &[usize], test: &[Vec<f64>], cfg: &ForestConfig, seed: u64) -> Result<Vec<(usize, f64)>> {
    let model = ForestModel::fit(x, y, cfg, seed)?;
    Ok(model.predict(test).into_iter().map(|p| (p.class, p.probability)).collect())
}

/// Cross-validated GraphSAGE detection. Each fold trains the detector on the
/// training nodes' labels over the whole graph, then classifies test nodes
/// with the configured downstream model.
pub fn sage_cv(graph: &Graph, x: &FeatureMatrix, cfg: &DetectionConfig, seed: u64) -> Result<CvOutcome> {
    if x.rows() != graph.node_count() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", x.rows(), graph.node_count())));
    }
    let (nodes, labels) = labeled_nodes(graph);
    let mut targets = vec![0usize; graph.node_count()];
    nodes.iter().zip(&labels).for_each(|(&v, &l)| targets[v] = l);
    let xt = Tensor::matrix(x.rows(), x.width(), x.to_f32())?;
    cross_validate(&labels, cfg.folds, seed, |fold, train, test| {
        let train_nodes: Vec<usize> = train.iter().map(|&i| nodes[i]).collect();
        let test_nodes: Vec<usize> = test.iter().map(|&i| nodes[i]).collect();
        let fold_seed = derive_seed(seed, &format!("detect.fold.{fold}"));
        let (model, _) = train_detector(graph, &xt, &targets, &train_nodes, &cfg.sage, fold_seed)?;
        match cfg.downstream {
            Downstream::Head => {
                let (_, logits) = sage_forward(graph, &xt, &model)?;
                let picked = gather_rows(&logits, &test_nodes);
                Ok((0..picked.rows())
                    .map(|r| {
                        let l = picked.row(r);
                        (usize::from(l[1] > l[0]), sigmoid(f64::from(l[1] - l[0])))
                    })
                    .collect())
            }
            Downstream::Forest => {
                let h = extract_embeddings(graph, &xt, &model)?;
                let ytrain: Vec<usize> = train_nodes.iter().map(|&v| targets[v]).collect();
                let forest_seed = derive_seed(seed, &format!("forest.fold.{fold}"));
                forest_predict(&to_rows(&h, &train_nodes), &ytrain, &to_rows(&h, &test_nodes), &cfg.forest, forest_seed)
            }
        }
    })
}

/// Cross-validated random forest on per-row features, with folds drawn from
/// the same seed as [`sage_cv`].
pub fn forest_cv(rows: &[Vec<f64>], labels: &[usize], cfg: &DetectionConfig, seed: u64) -> Result<CvOutcome> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    cross_validate(labels, cfg.folds, seed, |fold, train, test| {
        let x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
        let y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let t: Vec<Vec<f64>> = test.iter().map(|&i| rows[i].clone()).collect();
        forest_predict(&x, &y, &t, &cfg.forest, derive_seed(seed, &format!("forest.fold.{fold}")))
    })
}

/// Random forest on the single PageRank score of each labeled node.
pub fn pagerank_cv(graph: &Graph, pr: &PageRankConfig, cfg: &DetectionConfig, seed: u64) -> Result<CvOutcome> {
    let scores = pagerank(graph, pr)?;
    let (nodes, labels) = labeled_nodes(graph);
    let rows: Vec<Vec<f64>> = nodes.iter().map(|&v| vec![scores[v]]).collect();
    forest_cv(&rows, &labels, cfg, seed)
}

/// Random forest on tabular rows aligned to the graph's labeled nodes;
/// users without records get a zero row.
pub fn tabular_cv(table: &TabularTable, graph: &Graph, cfg: &DetectionConfig, seed: u64) -> Result<CvOutcome> {
    let (nodes, labels) = labeled_nodes(graph);
    let zero = vec![0.0; table.columns.len()];
    let rows: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&v| table.row(graph.index().user(v as u32)).map_or_else(|| zero.clone(), <[f64]>::to_vec))
        .collect();
    forest_cv(&rows, &labels, cfg, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub noise: f64,
    pub edges_added: usize,
    pub metrics: BTreeMap<String, MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("noise,edges_added,f1_mean,f1_std,auc_mean,auc_std\n");
        for r in &self.rows {
            let get = |k: &str| r.metrics.get(k).copied().unwrap_or(MetricSummary { mean: f64::NAN, std: f64::NAN });
            let (f1, auc) = (get("f1"), get("auc"));
            let g = crate::canonical::fmt_g17;
            s.push_str(&format!("{},{},{},{},{},{}\n", g(r.noise), r.edges_added, g(f1.mean), g(f1.std), g(auc.mean), g(auc.std)));
        }
        s
    }
}

/// For each noise level, adds `round(level · |E|)` benign edges, rebuilds
/// node features with `features`, and reruns [`sage_cv`]. Level 0 reuses
/// the original graph exactly.
pub fn run_robustness(
    graph: &Graph,
    features: impl Fn(&Graph) -> Result<FeatureMatrix>,
    levels: &[f64],
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<SweepReport> {
    let benign: Vec<u32> = (0..graph.node_count() as u32).filter(|&v| !graph.label(v).is_troll()).collect();
    let base_edges = graph.edge_count() as f64;
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &level) in levels.iter().enumerate() {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::Config(format!("noise level must be a nonnegative number, got {level}")));
        }
        let n = (level * base_edges).round() as usize;
        let mut rng = stream_rng(seed, &format!("robustness.{i}"));
        let noisy = ba_augment(graph, &benign, n, cfg.ba_m, &mut rng)?;
        let x = features(&noisy.graph)?;
        let cv = sage_cv(&noisy.graph, &x, cfg, seed)?;
        log::info!("noise {level}: f1 {:.4}", cv.report.metric("f1").map_or(f64::NAN, |m| m.mean));
        rows.push(SweepRow { noise: level, edges_added: n, metrics: cv.report.metrics });
    }
    Ok(SweepReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationMode {
    Removed,
    Only,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub group: String,
    pub mode: AblationMode,
    pub metrics: BTreeMap<String, MetricSummary>,
    /// Mean F1 minus the full-feature mean F1.
    pub delta_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub baseline: BTreeMap<String, MetricSummary>,
    pub entries: Vec<AblationEntry>,
}

impl AblationReport {
    pub fn entry(&self, group: &str, mode: AblationMode) -> Option<&AblationEntry> {
        self.entries.iter().find(|e| e.group == group && e.mode == mode)
    }
}

/// Reruns [`sage_cv`] with each group's columns zeroed, and with every other
/// group zeroed when `alone` is set. Zeroing keeps the input width, so
/// weight initialization is shared with the full-feature run.
pub fn run_ablation(graph: &Graph, x: &FeatureMatrix, groups: &[&str], alone: bool, cfg: &DetectionConfig, seed: u64) -> Result<AblationReport> {
    if groups.is_empty() {
        return Err(Error::Config("ablation needs at least one feature group".into()));
    }
    let f1 = |m: &BTreeMap<String, MetricSummary>| m.get("f1").map_or(f64::NAN, |s| s.mean);
    let baseline = sage_cv(graph, x, cfg, seed)?.report.metrics;
    let mut entries = Vec::new();
    for &g in groups {
        let mut runs = vec![(AblationMode::Removed, vec![g])];
        if alone {
            let others: Vec<&str> = x.groups().iter().map(|gr| gr.name.as_str()).filter(|&n| n != g).collect();
            if !others.is_empty() {
                runs.push((AblationMode::Only, others));
            }
        }
        for (mode, masked) in runs {
            let xm = mask_groups(x, &masked)?;
            let metrics = sage_cv(graph, &xm, cfg, seed)?.report.metrics;
            let delta_f1 = f1(&metrics) - f1(&baseline);
            log::info!("ablation {g} {mode:?}: delta f1 {delta_f1:+.4}");
            entries.push(AblationEntry { group: g.to_string(), mode, metrics, delta_f1 });
        }
    }
    Ok(AblationReport { baseline, entries })
}
