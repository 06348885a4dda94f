//! Snapshot link forecasting: a GraphSAGE encoder per snapshot, a gated
//! recurrent scan across snapshots, a 32-wide projection, and dot-product
//! edge scores `σ(Z_t[u] · Z_t[v])` for links of the next snapshot.
//!
//! Training is split into pure per-snapshot pieces (encode, transition loss,
//! encoder backward) behind [`SnapshotExecutor`], so the same loop runs
//! in-process or across workers with identical arithmetic.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ranking_metrics;
use crate::features::{label_aggregates, Standardizer, LABEL_AGGREGATE_WIDTH};
use crate::graph::{Csr, TemporalGraph};
use crate::nn::{
    adam_step, bce_with_logits, sigmoid, AdamConfig, AdamState, GruCell, GruStep, Linear, Module, Parameter, Scalar,
    Tensor,
};
use crate::sage::{SageCache, SageEncoder, HIDDEN};
use crate::seed::{stream_rng, Rng};

pub const EMBED_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Hidden state carried across snapshots.
    Recurrent,
    /// The same gated cell fed `(H_t, H_t)`: no history, identical parameter count.
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel<T: Scalar = f32> {
    pub variant: Variant,
    pub encoder: SageEncoder<T>,
    pub temporal: GruCell<T>,
    pub proj: Linear<T>,
}

/// Output of the coordinator-side scan over snapshot encodings.
#[derive(Debug, Clone)]
pub struct Scan<T: Scalar = f32> {
    steps: Vec<GruStep<T>>,
    pub z: Vec<Tensor<T>>,
}

impl<T: Scalar> ForecastModel<T> {
    pub fn new(variant: Variant, input: usize, hidden: usize, out: usize, rng: &mut Rng) -> Self {
        Self {
            variant,
            encoder: SageEncoder::new("sage", input, hidden, rng),
            temporal: GruCell::new("gru", hidden, hidden, rng),
            proj: Linear::new("proj", hidden, out, rng),
        }
    }

    /// Temporal cell and projection over encodings `h[0..]` with `h_0 = 0`.
    pub fn scan(&self, h: &[Tensor<T>]) -> Result<Scan<T>> {
        let mut steps = Vec::with_capacity(h.len());
        let mut z = Vec::with_capacity(h.len());
        let mut state: Option<Tensor<T>> = None;
        for ht in h {
            let step = match self.variant {
                Variant::Recurrent => {
                    let prev = state.take().unwrap_or_else(|| Tensor::zeros(&[ht.rows(), self.temporal.hidden()]));
                    self.temporal.forward(ht, &prev)?
                }
                Variant::Static => self.temporal.forward(ht, ht)?,
            };
            z.push(self.proj.forward(&step.h)?);
            if self.variant == Variant::Recurrent {
                state = Some(step.h.clone());
            }
            steps.push(step);
        }
        Ok(Scan { steps, z })
    }

    /// Backpropagates `∂L/∂Z_t` through projection and scan, accumulating
    /// their gradients, and returns `∂L/∂H_t` for `t` up to the last index
    /// carrying a gradient.
    pub fn scan_backward(&mut self, scan: &Scan<T>, dz: &[Option<Tensor<T>>]) -> Result<Vec<Tensor<T>>> {
        let Some(last) = dz.iter().rposition(Option::is_some) else {
            return Ok(Vec::new());
        };
        let mut dh_out: Vec<Tensor<T>> = Vec::with_capacity(last + 1);
        let mut carry: Option<Tensor<T>> = None;
        for t in (0..=last).rev() {
            let step = &scan.steps[t];
            let mut dh = match &dz[t] {
                Some(g) => self.proj.backward(&step.h, g)?,
                None => Tensor::zeros(step.h.shape()),
            };
            if let Some(c) = carry.take() {
                dh.add_assign(&c)?;
            }
            let (dx, dprev) = self.temporal.backward(step, &dh)?;
            match self.variant {
                Variant::Recurrent => {
                    dh_out.push(dx);
                    carry = Some(dprev);
                }
                Variant::Static => dh_out.push(dx.add(&dprev)?),
            }
        }
        dh_out.reverse();
        Ok(dh_out)
    }
}

impl<T: Scalar> Module<T> for ForecastModel<T> {
    fn params(&self) -> Vec<&Parameter<T>> {
        let mut v = self.encoder.params();
        v.extend(self.temporal.params());
        v.extend(self.proj.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut v = self.encoder.params_mut();
        v.extend(self.temporal.params_mut());
        v.extend(self.proj.params_mut());
        v
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// `σ(Z[u] · Z[v])`.
pub fn predict_link<T: Scalar>(z: &Tensor<T>, u: usize, v: usize) -> Result<f64> {
    if u >= z.rows() || v >= z.rows() {
        return Err(Error::UnknownNode(format!("node id {} out of {}", u.max(v), z.rows())));
    }
    Ok(sigmoid(dot(z.row(u), z.row(v)).to_f64()))
}

/// Binary cross-entropy of dot-product scores on one transition: positives
/// then negatives. Returns the loss and `∂L/∂Z`.
pub fn transition_loss<T: Scalar>(z: &Tensor<T>, positives: &[(u32, u32)], negatives: &[(u32, u32)]) -> Result<(T, Tensor<T>)> {
    let pairs: Vec<(u32, u32)> = positives.iter().chain(negatives).copied().collect();
    let scores: Vec<T> = pairs.iter().map(|&(u, v)| dot(z.row(u as usize), z.row(v as usize))).collect();
    let targets: Vec<T> = (0..pairs.len()).map(|i| if i < positives.len() { T::one() } else { T::zero() }).collect();
    let (loss, ds) = bce_with_logits(&scores, &targets)?;
    let mut dz = Tensor::zeros(z.shape());
    let c = z.cols();
    for (&(u, v), &g) in pairs.iter().zip(&ds) {
        let (u, v) = (u as usize, v as usize);
        for k in 0..c {
            let zu = z.get(u, k);
            let zv = z.get(v, k);
            dz.row_mut(u)[k] = dz.row_mut(u)[k] + g * zv;
            dz.row_mut(v)[k] = dz.row_mut(v)[k] + g * zu;
        }
    }
    Ok((loss, dz))
}

/// Canonical undirected key.
pub fn pair_key(u: u32, v: u32) -> (u32, u32) {
    (u.min(v), u.max(v))
}

/// `count` pairs `(u, v)`, `u` from `left`, `v` from `right`, `u ≠ v`, whose
/// unordered key is not in `exclude`. Draws with replacement.
pub fn sample_typed_negatives(
    exclude: &HashSet<(u32, u32)>,
    left: &[u32],
    right: &[u32],
    count: usize,
    rng: &mut Rng,
) -> Result<Vec<(u32, u32)>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    if left.is_empty() || right.is_empty() {
        return Err(Error::Training("negative sampling from an empty node pool".into()));
    }
    let budget = 100 * count + 1000;
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > budget {
            return Err(Error::Training(format!(
                "found only {} of {count} negatives after {budget} draws; graph too dense",
                out.len()
            )));
        }
        let u = left[rng.random_range(0..left.len())];
        let v = right[rng.random_range(0..right.len())];
        if u != v && !exclude.contains(&pair_key(u, v)) {
            out.push((u, v));
        }
    }
    Ok(out)
}

/// Uniform non-edges over all `node_count` nodes.
pub fn sample_negatives(exclude: &HashSet<(u32, u32)>, node_count: usize, count: usize, rng: &mut Rng) -> Result<Vec<(u32, u32)>> {
    let all: Vec<u32> = (0..node_count as u32).collect();
    sample_typed_negatives(exclude, &all, &all, count, rng)
}

/// Snapshot index ranges for training, validation and test targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub snapshots: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

impl Split {
    /// First 80% train, next 5% validation, final 10% test (each at least one).
    pub fn new(t: usize) -> Result<Self> {
        if t < 4 {
            return Err(Error::Config(format!("forecasting needs at least 4 snapshots, got {t}")));
        }
        let n_test = ((0.10 * t as f64).round() as usize).max(1);
        let n_val = ((0.05 * t as f64).round() as usize).max(1);
        let n_train = ((0.8 * t as f64).floor() as usize).min(t - n_val - n_test);
        if n_train < 2 {
            return Err(Error::Config(format!("{t} snapshots leave fewer than 2 for training")));
        }
        Ok(Self { snapshots: t, n_train, n_val, n_test })
    }

    /// Target snapshots scored from the preceding snapshot's embeddings.
    pub fn train_targets(&self) -> Range<usize> {
        1..self.n_train
    }

    pub fn val_targets(&self) -> Range<usize> {
        self.n_train..self.n_train + self.n_val
    }

    pub fn test_targets(&self) -> Range<usize> {
        self.snapshots - self.n_test..self.snapshots
    }
}

/// Everything the training loop needs, derived once from a temporal graph.
#[derive(Debug, Clone)]
pub struct ForecastData {
    pub tg: TemporalGraph,
    pub features: Vec<Tensor<f32>>,
    /// Distinct unordered edges of each snapshot.
    pub positives: Vec<Vec<(u32, u32)>>,
    pub positive_sets: Vec<HashSet<(u32, u32)>>,
    pub trolls: Vec<bool>,
    pub split: Split,
    pub standardizer: Standardizer,
    pub unknown_labels: usize,
}

impl ForecastData {
    pub fn new(tg: TemporalGraph) -> Result<Self> {
        let split = Split::new(tg.len())?;
        let mut mats = Vec::with_capacity(tg.len());
        let mut unknown_labels = 0;
        for s in &tg.snapshots {
            let (m, unknown) = label_aggregates(&s.graph);
            unknown_labels = unknown;
            mats.push(m);
        }
        let train: Vec<&_> = mats[..split.n_train].iter().collect();
        let standardizer = Standardizer::fit_stacked(&train, 0..LABEL_AGGREGATE_WIDTH);
        let features = mats
            .into_iter()
            .map(|mut m| {
                standardizer.apply(&mut m);
                Tensor::matrix(m.rows(), m.width(), m.to_f32())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut positives = Vec::with_capacity(tg.len());
        let mut positive_sets = Vec::with_capacity(tg.len());
        for s in &tg.snapshots {
            let set: HashSet<(u32, u32)> = s.graph.edges().filter(|&(u, v, _)| u != v).map(|(u, v, _)| pair_key(u, v)).collect();
            let mut list: Vec<(u32, u32)> = set.iter().copied().collect();
            list.sort_unstable();
            positives.push(list);
            positive_sets.push(set);
        }
        let trolls = tg.labels.iter().map(|l| l.is_troll()).collect();
        Ok(Self { tg, features, positives, positive_sets, trolls, split, standardizer, unknown_labels })
    }

    pub fn node_count(&self) -> usize {
        self.tg.node_count()
    }

    pub fn adjacency(&self, t: usize) -> &Csr {
        self.tg.graph(t).und_adj()
    }

    pub fn troll_ids(&self) -> Vec<u32> {
        (0..self.trolls.len() as u32).filter(|&v| self.trolls[v as usize]).collect()
    }

    pub fn benign_ids(&self) -> Vec<u32> {
        (0..self.trolls.len() as u32).filter(|&v| !self.trolls[v as usize]).collect()
    }
}

/// Scoring work for one transition: embeddings of the source snapshot and the
/// labeled pairs of the target snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTask {
    pub target: usize,
    pub z: Arc<Tensor<f32>>,
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub target: usize,
    pub loss: f32,
    pub dz: Tensor<f32>,
}

/// Per-snapshot work of one training epoch. All methods take the parameter
/// version they were issued under.
pub trait SnapshotExecutor {
    /// Encodes snapshots `ts` with `encoder`, returning `H_t` in order.
    fn encode(&mut self, version: u64, encoder: &SageEncoder<f32>, ts: Range<usize>) -> Result<Vec<Tensor<f32>>>;

    fn losses(&mut self, version: u64, tasks: Vec<LossTask>) -> Result<Vec<LossResult>>;

    /// Encoder gradient contribution of each `(t, ∂L/∂H_t)`, computed from
    /// zero and returned in ascending `t`.
    fn encoder_grads(&mut self, version: u64, upstream: Vec<(usize, Tensor<f32>)>) -> Result<Vec<(usize, Vec<Tensor<f32>>)>>;
}

/// Encoder forward for one snapshot, keeping the cache for backward.
pub fn encode_snapshot(encoder: &SageEncoder<f32>, data: &ForecastData, t: usize) -> Result<SageCache<f32>> {
    encoder.forward(data.adjacency(t), &data.features[t])
}

/// Gradient contribution of one snapshot, computed from zero.
pub fn snapshot_encoder_grads(
    encoder: &SageEncoder<f32>,
    data: &ForecastData,
    t: usize,
    cache: &SageCache<f32>,
    dh: &Tensor<f32>,
) -> Result<Vec<Tensor<f32>>> {
    let mut local = encoder.clone();
    local.zero_grad();
    local.backward(data.adjacency(t), cache, dh)?;
    Ok(local.params().into_iter().map(|p| p.grad.clone()).collect())
}

pub fn run_loss_task(task: &LossTask) -> Result<LossResult> {
    let (loss, dz) = transition_loss(&task.z, &task.positives, &task.negatives)?;
    Ok(LossResult { target: task.target, loss, dz })
}

/// In-process executor holding the forward caches between phases.
pub struct LocalExecutor {
    data: Arc<ForecastData>,
    caches: Vec<(usize, SageCache<f32>)>,
    encoder: Option<SageEncoder<f32>>,
}

impl LocalExecutor {
    pub fn new(data: Arc<ForecastData>) -> Self {
        Self { data, caches: Vec::new(), encoder: None }
    }
}

impl SnapshotExecutor for LocalExecutor {
    fn encode(&mut self, _version: u64, encoder: &SageEncoder<f32>, ts: Range<usize>) -> Result<Vec<Tensor<f32>>> {
        self.caches.clear();
        self.encoder = Some(encoder.clone());
        let mut out = Vec::with_capacity(ts.len());
        for t in ts {
            let cache = encode_snapshot(encoder, &self.data, t)?;
            out.push(cache.h2.clone());
            self.caches.push((t, cache));
        }
        Ok(out)
    }

    fn losses(&mut self, _version: u64, tasks: Vec<LossTask>) -> Result<Vec<LossResult>> {
        tasks.iter().map(run_loss_task).collect()
    }

    fn encoder_grads(&mut self, _version: u64, upstream: Vec<(usize, Tensor<f32>)>) -> Result<Vec<(usize, Vec<Tensor<f32>>)>> {
        let encoder = self.encoder.as_ref().ok_or_else(|| Error::Training("backward before encode".into()))?;
        upstream
            .iter()
            .map(|(t, dh)| {
                let (_, cache) = self
                    .caches
                    .iter()
                    .find(|(ct, _)| ct == t)
                    .ok_or_else(|| Error::Training(format!("no cached encoding for snapshot {t}")))?;
                Ok((*t, snapshot_encoder_grads(encoder, &self.data, *t, cache, dh)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    pub variant: Variant,
    pub hidden: usize,
    pub embed_dim: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self { variant: Variant::Recurrent, hidden: HIDDEN, embed_dim: EMBED_DIM, lr: 1e-3, max_epochs: 200, patience: 10 }
    }
}

/// Tracks the best validation score; improvement must be strict.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: None, stale: 0 }
    }

    /// Records `metric` for `epoch`; returns whether it is a new best.
    pub fn observe(&mut self, epoch: usize, metric: f64) -> bool {
        match self.best {
            Some((_, b)) if metric <= b || metric.is_nan() => {
                self.stale += 1;
                false
            }
            _ => {
                self.best = Some((epoch, metric));
                self.stale = 0;
                true
            }
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastEpoch {
    pub epoch: usize,
    pub version: u64,
    pub loss: f64,
    pub val_ap: f64,
}

#[derive(Debug, Clone)]
pub struct ForecastOutcome {
    pub model: ForecastModel<f32>,
    pub best_epoch: usize,
    pub best_val_ap: f64,
    pub log: Vec<ForecastEpoch>,
}

struct EvalPairs {
    target: usize,
    positives: Vec<(u32, u32)>,
    negatives: Vec<(u32, u32)>,
}

fn eval_pairs(data: &ForecastData, targets: Range<usize>, rng: &mut Rng) -> Result<Vec<EvalPairs>> {
    targets
        .filter(|&s| !data.positives[s].is_empty())
        .map(|s| {
            let positives = data.positives[s].clone();
            let negatives = sample_negatives(&data.positive_sets[s], data.node_count(), positives.len(), rng)?;
            Ok(EvalPairs { target: s, positives, negatives })
        })
        .collect()
}

fn score_pairs(z: &Tensor<f32>, pos: &[(u32, u32)], neg: &[(u32, u32)]) -> Result<(f64, f64)> {
    let mut scores = Vec::with_capacity(pos.len() + neg.len());
    let mut labels = Vec::with_capacity(pos.len() + neg.len());
    for (&(u, v), label) in pos.iter().map(|p| (p, true)).chain(neg.iter().map(|n| (n, false))) {
        scores.push(f64::from(dot(z.row(u as usize), z.row(v as usize))));
        labels.push(label);
    }
    let m = ranking_metrics(&scores, &labels)?;
    Ok((m.auc, m.ap))
}

/// Stepwise training state. Validation AP at each epoch is measured on the
/// parameters before that epoch's update; the best such parameters are kept.
/// An epoch either commits one optimizer step or leaves the state untouched.
pub struct Trainer {
    pub model: ForecastModel<f32>,
    /// Number of committed optimizer steps.
    pub version: u64,
    pub log: Vec<ForecastEpoch>,
    state: AdamState,
    adam: AdamConfig,
    rng: Rng,
    val: Vec<EvalPairs>,
    stopper: EarlyStopping,
    best: ForecastModel<f32>,
    forward_end: usize,
    train_targets: Vec<usize>,
    max_epochs: usize,
}

impl Trainer {
    pub fn new(data: &ForecastData, cfg: &ForecastConfig, seed: u64) -> Result<Self> {
        let split = data.split;
        let mut init_rng = stream_rng(seed, "forecast.init");
        let model = ForecastModel::<f32>::new(cfg.variant, LABEL_AGGREGATE_WIDTH, cfg.hidden, cfg.embed_dim, &mut init_rng);
        let train_targets: Vec<usize> = split.train_targets().filter(|&s| !data.positives[s].is_empty()).collect();
        if train_targets.is_empty() {
            return Err(Error::Training("no training transition has positive edges".into()));
        }
        Ok(Self {
            state: AdamState::new(&model.params()),
            adam: AdamConfig { lr: cfg.lr, ..AdamConfig::default() },
            rng: stream_rng(seed, "forecast.negatives"),
            val: eval_pairs(data, split.val_targets(), &mut stream_rng(seed, "forecast.validation"))?,
            stopper: EarlyStopping::new(cfg.patience),
            best: model.clone(),
            model,
            version: 0,
            log: Vec::new(),
            forward_end: split.n_train + split.n_val - 1,
            train_targets,
            max_epochs: cfg.max_epochs,
        })
    }

    pub fn is_done(&self) -> bool {
        self.stopper.should_stop() || self.log.len() >= self.max_epochs
    }

    fn attempt(&mut self, data: &ForecastData, exec: &mut dyn SnapshotExecutor) -> Result<(f64, f64, ForecastModel<f32>)> {
        let version = self.version;
        let mut model = self.model.clone();
        model.zero_grad();
        let h = exec.encode(version, &model.encoder, 0..self.forward_end)?;
        let scan = model.scan(&h)?;
        let val_ap = if self.val.is_empty() {
            0.0
        } else {
            let mut total = 0.0;
            for p in &self.val {
                total += score_pairs(&scan.z[p.target - 1], &p.positives, &p.negatives)?.1;
            }
            total / self.val.len() as f64
        };
        let mut tasks = Vec::with_capacity(self.train_targets.len());
        for &s in &self.train_targets {
            let positives = data.positives[s].clone();
            let negatives = sample_negatives(&data.positive_sets[s], data.node_count(), positives.len(), &mut self.rng)?;
            tasks.push(LossTask { target: s, z: Arc::new(scan.z[s - 1].clone()), positives, negatives });
        }
        let mut results = exec.losses(version, tasks)?;
        results.sort_by_key(|r| r.target);
        let scale = 1.0 / results.len() as f32;
        let mut loss = 0.0f32;
        let mut dz: Vec<Option<Tensor<f32>>> = vec![None; self.forward_end];
        for r in results {
            loss += r.loss * scale;
            dz[r.target - 1] = Some(r.dz.map(|g| g * scale));
        }
        let dh = model.scan_backward(&scan, &dz)?;
        let upstream: Vec<(usize, Tensor<f32>)> = dh.into_iter().enumerate().collect();
        let mut contributions = exec.encoder_grads(version, upstream)?;
        contributions.sort_by_key(|(t, _)| *t);
        for (_, grads) in contributions {
            for (p, g) in model.encoder.params_mut().into_iter().zip(&grads) {
                p.accumulate(g)?;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss at epoch {}", self.log.len())));
        }
        Ok((f64::from(loss), val_ap, model))
    }

    /// Runs one epoch. A transport failure retries the epoch once with the
    /// negative-sampling stream rewound; a second failure is returned with
    /// no parameter change.
    pub fn epoch(&mut self, data: &ForecastData, exec: &mut dyn SnapshotExecutor) -> Result<&ForecastEpoch> {
        let epoch = self.log.len();
        let rng_at_start = self.rng.clone();
        let (loss, val_ap, mut model) = match self.attempt(data, exec) {
            Ok(v) => v,
            Err(e @ Error::Transport(_)) => {
                log::warn!("epoch {epoch} failed ({e}); retrying once");
                self.rng = rng_at_start.clone();
                self.attempt(data, exec).inspect_err(|_| self.rng = rng_at_start)?
            }
            Err(e) => {
                self.rng = rng_at_start;
                return Err(e);
            }
        };
        if self.stopper.observe(epoch, val_ap) {
            self.best = self.model.clone();
        }
        adam_step(model.params_mut(), &mut self.state, &self.adam)?;
        self.model = model;
        self.version += 1;
        log::debug!("epoch {epoch}: loss {loss:.6} val_ap {val_ap:.4}");
        self.log.push(ForecastEpoch { epoch, version: self.version, loss, val_ap });
        Ok(self.log.last().expect("just pushed"))
    }

    pub fn finish(self) -> ForecastOutcome {
        let (best_epoch, best_val_ap) = self.stopper.best().unwrap_or((0, 0.0));
        let mut best = self.best;
        best.zero_grad();
        ForecastOutcome { model: best, best_epoch, best_val_ap, log: self.log }
    }
}

/// Runs [`Trainer`] to early stopping or the epoch cap.
pub fn train_with_executor(
    exec: &mut dyn SnapshotExecutor,
    data: &ForecastData,
    cfg: &ForecastConfig,
    seed: u64,
) -> Result<ForecastOutcome> {
    let mut trainer = Trainer::new(data, cfg, seed)?;
    while !trainer.is_done() {
        trainer.epoch(data, exec)?;
    }
    Ok(trainer.finish())
}

/// Single-process training.
pub fn train_forecaster(data: Arc<ForecastData>, cfg: &ForecastConfig, seed: u64) -> Result<ForecastOutcome> {
    let mut exec = LocalExecutor::new(data.clone());
    train_with_executor(&mut exec, &data, cfg, seed)
}

/// Embeddings `Z_t` for every snapshot.
pub fn forecast_forward(model: &ForecastModel<f32>, data: &ForecastData) -> Result<Vec<Tensor<f32>>> {
    forecast_forward_with(model, data.tg.len(), |t| encode_snapshot(&model.encoder, data, t).map(|c| c.h2))
}

pub fn forecast_forward_with(
    model: &ForecastModel<f32>,
    len: usize,
    mut encode: impl FnMut(usize) -> Result<Tensor<f32>>,
) -> Result<Vec<Tensor<f32>>> {
    let h = (0..len).map(&mut encode).collect::<Result<Vec<_>>>()?;
    Ok(model.scan(&h)?.z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMetrics {
    pub target: usize,
    pub positives: usize,
    pub auc: f64,
    pub ap: f64,
    pub tte_auc: Option<f64>,
    pub tte_ap: Option<f64>,
    pub tue_auc: Option<f64>,
    pub tue_ap: Option<f64>,
}

/// Test metrics averaged over test transitions; troll–troll (TTE) and
/// troll–user (TUE) fields are `None` when no test transition has such edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub auc: f64,
    pub ap: f64,
    pub tte_auc: Option<f64>,
    pub tte_ap: Option<f64>,
    pub tue_auc: Option<f64>,
    pub tue_ap: Option<f64>,
    pub per_transition: Vec<TransitionMetrics>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn typed_metrics(
    z: &Tensor<f32>,
    data: &ForecastData,
    s: usize,
    keep: impl Fn(bool, bool) -> bool,
    left: &[u32],
    right: &[u32],
    rng: &mut Rng,
) -> Result<(Option<f64>, Option<f64>)> {
    let pos: Vec<(u32, u32)> = data.positives[s]
        .iter()
        .copied()
        .filter(|&(u, v)| keep(data.trolls[u as usize], data.trolls[v as usize]))
        .collect();
    if pos.is_empty() {
        return Ok((None, None));
    }
    match sample_typed_negatives(&data.positive_sets[s], left, right, pos.len(), rng) {
        Ok(neg) => {
            let (auc, ap) = score_pairs(z, &pos, &neg)?;
            Ok((Some(auc), Some(ap)))
        }
        Err(e) => {
            log::warn!("snapshot {s}: skipping typed metrics ({e})");
            Ok((None, None))
        }
    }
}

/// Scores each test transition `t-1 → t` with `Z_{t-1}` against an equal
/// number of sampled non-edges drawn from `rng`.
pub fn evaluate_forecaster(model: &ForecastModel<f32>, data: &ForecastData, rng: &mut Rng) -> Result<ForecastReport> {
    let z = forecast_forward(model, data)?;
    let trolls = data.troll_ids();
    let benign = data.benign_ids();
    let mut per_transition = Vec::new();
    for s in data.split.test_targets() {
        if data.positives[s].is_empty() {
            continue;
        }
        let zt = &z[s - 1];
        let pos = &data.positives[s];
        let neg = sample_negatives(&data.positive_sets[s], data.node_count(), pos.len(), rng)?;
        let (auc, ap) = score_pairs(zt, pos, &neg)?;
        let (tte_auc, tte_ap) = typed_metrics(zt, data, s, |a, b| a && b, &trolls, &trolls, rng)?;
        let (tue_auc, tue_ap) = typed_metrics(zt, data, s, |a, b| a != b, &trolls, &benign, rng)?;
        per_transition.push(TransitionMetrics { target: s, positives: pos.len(), auc, ap, tte_auc, tte_ap, tue_auc, tue_ap });
    }
    if per_transition.is_empty() {
        return Err(Error::Data("no test transition has positive edges".into()));
    }
    let pt = &per_transition;
    Ok(ForecastReport {
        auc: mean_of(pt.iter().map(|m| Some(m.auc))).unwrap_or(f64::NAN),
        ap: mean_of(pt.iter().map(|m| Some(m.ap))).unwrap_or(f64::NAN),
        tte_auc: mean_of(pt.iter().map(|m| m.tte_auc)),
        tte_ap: mean_of(pt.iter().map(|m| m.tte_ap)),
        tue_auc: mean_of(pt.iter().map(|m| m.tue_auc)),
        tue_ap: mean_of(pt.iter().map(|m| m.tue_ap)),
        per_transition: per_transition.clone(),
    })
}

/// Whole-sequence loss and gradients in any precision: encoder on every
/// snapshot, scan, and transition losses for `tasks` (target snapshot,
/// positives, negatives), averaged.
pub fn sequence_loss_and_grad<T: Scalar>(
    model: &mut ForecastModel<T>,
    adjacency: &[&Csr],
    features: &[Tensor<T>],
    tasks: &[(usize, Vec<(u32, u32)>, Vec<(u32, u32)>)],
) -> Result<T> {
    let caches = adjacency
        .iter()
        .zip(features)
        .map(|(adj, x)| model.encoder.forward(adj, x))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<Tensor<T>> = caches.iter().map(|c| c.h2.clone()).collect();
    let scan = model.scan(&h)?;
    let scale = T::one() / T::from_f64(tasks.len() as f64);
    let mut loss = T::zero();
    let mut dz: Vec<Option<Tensor<T>>> = vec![None; h.len()];
    for (s, pos, neg) in tasks {
        let (l, g) = transition_loss(&scan.z[s - 1], pos, neg)?;
        loss = loss + l * scale;
        dz[s - 1] = Some(g.map(|x| x * scale));
    }
    let dh = model.scan_backward(&scan, &dz)?;
    for (t, g) in dh.iter().enumerate() {
        model.encoder.backward(adjacency[t], &caches[t], g)?;
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let s = Split::new(13).unwrap();
        assert_eq!((s.n_train, s.n_val, s.n_test), (10, 1, 1));
        assert_eq!(s.test_targets(), 12..13);
        let s = Split::new(20).unwrap();
        assert_eq!((s.n_train, s.n_val, s.n_test), (16, 1, 2));
        let s = Split::new(4).unwrap();
        assert_eq!((s.n_train, s.n_val, s.n_test), (2, 1, 1));
        assert!(Split::new(3).is_err());
    }

    #[test]
    fn link_probability_cases() {
        let z = Tensor::<f32>::matrix(3, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(predict_link(&z, 0, 0).unwrap(), 0.5);
        assert!((predict_link(&z, 1, 1).unwrap() - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert_eq!(predict_link(&z, 1, 2).unwrap(), 0.5);
        assert!(predict_link(&z, 0, 3).is_err());
    }

    #[test]
    fn negatives_avoid_positives() {
        let exclude: HashSet<(u32, u32)> = [(0, 1), (1, 2)].into_iter().collect();
        let mut rng = crate::seed::rng_from_seed(3);
        let neg = sample_negatives(&exclude, 4, 50, &mut rng).unwrap();
        assert_eq!(neg.len(), 50);
        assert!(neg.iter().all(|&(u, v)| u != v && !exclude.contains(&pair_key(u, v))));
        let again = sample_negatives(&exclude, 4, 50, &mut crate::seed::rng_from_seed(3)).unwrap();
        assert_eq!(neg, again);
        let full: HashSet<(u32, u32)> = [(0, 1)].into_iter().collect();
        assert!(sample_negatives(&full, 2, 1, &mut rng).is_err());
    }

    #[test]
    fn early_stopping_patience() {
        let mut es = EarlyStopping::new(10);
        assert!(es.observe(0, 0.5));
        for e in 1..=9 {
            assert!(!es.observe(e, 0.5));
            assert!(!es.should_stop());
        }
        assert!(!es.observe(10, 0.4));
        assert!(es.should_stop());
        assert_eq!(es.best(), Some((0, 0.5)));
    }

    #[test]
    fn zero_input_weights_give_constant_rows() {
        let mut rng = crate::seed::rng_from_seed(1);
        let mut m = ForecastModel::<f32>::new(Variant::Recurrent, 3, 8, 4, &mut rng);
        m.temporal.w_z.value.fill(0.0);
        m.temporal.w_r.value.fill(0.0);
        m.temporal.w_h.value.fill(0.0);
        m.temporal.b_h.value.fill(0.3);
        let h = Tensor::<f32>::glorot(5, 8, &mut rng);
        let scan = m.scan(&[h]).unwrap();
        for r in 1..5 {
            assert_eq!(scan.z[0].row(r), scan.z[0].row(0));
        }
    }

    #[test]
    fn parameter_parity() {
        let mut rng = crate::seed::rng_from_seed(1);
        let a = ForecastModel::<f32>::new(Variant::Recurrent, 15, 64, 32, &mut rng);
        let b = ForecastModel::<f32>::new(Variant::Static, 15, 64, 32, &mut rng);
        assert_eq!(a.param_count(), b.param_count());
    }
}
