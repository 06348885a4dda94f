//! Two-layer GraphSAGE (mean aggregator, self ‖ neighbor-mean concatenation)
//! over undirected neighborhoods, with a linear two-class head.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Csr, Graph};
use crate::nn::{
    adam_step, cross_entropy, mean_aggregate, mean_aggregate_backward, Activation, AdamConfig, AdamState, Linear,
    Module, Parameter, Scalar, Tensor,
};
use crate::seed::{stream_rng, Rng};

pub const HIDDEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SageEncoder<T: Scalar = f32> {
    pub layer1: Linear<T>,
    pub layer2: Linear<T>,
}

/// Intermediate activations of one encoder pass.
#[derive(Debug, Clone)]
pub struct SageCache<T: Scalar = f32> {
    cat1: Tensor<T>,
    h1: Tensor<T>,
    cat2: Tensor<T>,
    pub h2: Tensor<T>,
}

fn sage_layer<T: Scalar>(layer: &Linear<T>, adj: &Csr, h: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let cat = h.hconcat(&mean_aggregate(adj, h)?)?;
    let out = Activation::Relu.forward(&layer.forward(&cat)?);
    Ok((cat, out))
}

fn sage_layer_backward<T: Scalar>(
    layer: &mut Linear<T>,
    adj: &Csr,
    cat: &Tensor<T>,
    out: &Tensor<T>,
    dout: &Tensor<T>,
) -> Result<Tensor<T>> {
    let da = Activation::Relu.backward(out, dout)?;
    let dcat = layer.backward(cat, &da)?;
    let (mut dh, dagg) = dcat.hsplit(cat.cols() / 2);
    dh.add_assign(&mean_aggregate_backward(adj, &dagg)?)?;
    Ok(dh)
}

impl<T: Scalar> SageEncoder<T> {
    pub fn new(prefix: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        Self {
            layer1: Linear::new(&format!("{prefix}.layer1"), 2 * input, hidden, rng),
            layer2: Linear::new(&format!("{prefix}.layer2"), 2 * hidden, hidden, rng),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layer1.fan_in() / 2
    }

    pub fn hidden(&self) -> usize {
        self.layer2.fan_out()
    }

    pub fn forward(&self, adj: &Csr, x: &Tensor<T>) -> Result<SageCache<T>> {
        if x.cols() != self.input_width() {
            return Err(Error::Shape(format!("encoder expects {} features, got {}", self.input_width(), x.cols())));
        }
        let (cat1, h1) = sage_layer(&self.layer1, adj, x)?;
        let (cat2, h2) = sage_layer(&self.layer2, adj, &h1)?;
        Ok(SageCache { cat1, h1, cat2, h2 })
    }

    /// Accumulates parameter gradients from `∂L/∂H` and returns `∂L/∂X`.
    pub fn backward(&mut self, adj: &Csr, cache: &SageCache<T>, dh: &Tensor<T>) -> Result<Tensor<T>> {
        let dh1 = sage_layer_backward(&mut self.layer2, adj, &cache.cat2, &cache.h2, dh)?;
        sage_layer_backward(&mut self.layer1, adj, &cache.cat1, &cache.h1, &dh1)
    }
}

impl<T: Scalar> Module<T> for SageEncoder<T> {
    fn params(&self) -> Vec<&Parameter<T>> {
        let mut v = self.layer1.params();
        v.extend(self.layer2.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut v = self.layer1.params_mut();
        v.extend(self.layer2.params_mut());
        v
    }
}

/// Encoder plus linear head producing two logits per node.
#[derive(Debug, Clone, PartialEq)]
pub struct SageClassifier<T: Scalar = f32> {
    pub encoder: SageEncoder<T>,
    pub head: Linear<T>,
}

impl<T: Scalar> SageClassifier<T> {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let encoder = SageEncoder::new("sage", input, hidden, rng);
        let head = Linear::new("head", hidden, 2, rng);
        Self { encoder, head }
    }

    /// Returns the hidden representation `H` and the logits.
    pub fn forward(&self, graph: &Graph, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let cache = self.encoder.forward(graph.und_adj(), x)?;
        let logits = self.head.forward(&cache.h2)?;
        Ok((cache.h2, logits))
    }

    /// Mean cross-entropy over `rows`; accumulates gradients and returns the
    /// loss and the full logits.
    pub fn loss_and_grad(&mut self, adj: &Csr, x: &Tensor<T>, targets: &[usize], rows: &[usize]) -> Result<(T, Tensor<T>)> {
        let cache = self.encoder.forward(adj, x)?;
        let logits = self.head.forward(&cache.h2)?;
        let picked = gather_rows(&logits, rows);
        let ys: Vec<usize> = rows.iter().map(|&r| targets[r]).collect();
        let (loss, dpicked) = cross_entropy(&picked, &ys)?;
        let mut dlogits = Tensor::zeros(logits.shape());
        for (k, &r) in rows.iter().enumerate() {
            dlogits.row_mut(r).copy_from_slice(dpicked.row(k));
        }
        let dh = self.head.backward(&cache.h2, &dlogits)?;
        self.encoder.backward(adj, &cache, &dh)?;
        Ok((loss, logits))
    }
}

impl<T: Scalar> Module<T> for SageClassifier<T> {
    fn params(&self) -> Vec<&Parameter<T>> {
        let mut v = self.encoder.params();
        v.extend(self.head.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        let mut v = self.encoder.params_mut();
        v.extend(self.head.params_mut());
        v
    }
}

pub fn gather_rows<T: Scalar>(m: &Tensor<T>, rows: &[usize]) -> Tensor<T> {
    let mut data = Vec::with_capacity(rows.len() * m.cols());
    for &r in rows {
        data.extend_from_slice(m.row(r));
    }
    Tensor::from_vec(&[rows.len(), m.cols()], data).expect("row gather keeps width")
}

pub fn sage_forward(graph: &Graph, x: &Tensor<f32>, model: &SageClassifier<f32>) -> Result<(Tensor<f32>, Tensor<f32>)> {
    if x.rows() != graph.node_count() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", x.rows(), graph.node_count())));
    }
    model.forward(graph, x)
}

/// Pre-head hidden representation, one 64-wide row per node.
pub fn extract_embeddings(graph: &Graph, x: &Tensor<f32>, model: &SageClassifier<f32>) -> Result<Tensor<f32>> {
    Ok(sage_forward(graph, x, model)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectConfig {
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self { epochs: 100, lr: 1e-3, hidden: HIDDEN }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
}

fn accuracy(logits: &Tensor<f32>, targets: &[usize], rows: &[usize]) -> f64 {
    let correct = rows
        .iter()
        .filter(|&&r| {
            let l = logits.row(r);
            usize::from(l[1] > l[0]) == targets[r]
        })
        .count();
    correct as f64 / rows.len().max(1) as f64
}

/// Full-batch training with cross-entropy on `train_rows` only.
/// `targets[v]` is 1 for troll, 0 for benign.
pub fn train_detector(
    graph: &Graph,
    x: &Tensor<f32>,
    targets: &[usize],
    train_rows: &[usize],
    cfg: &DetectConfig,
    seed: u64,
) -> Result<(SageClassifier<f32>, Vec<EpochLog>)> {
    if x.rows() != graph.node_count() || targets.len() != graph.node_count() {
        return Err(Error::Shape(format!(
            "{} feature rows and {} targets for {} nodes",
            x.rows(),
            targets.len(),
            graph.node_count()
        )));
    }
    if train_rows.is_empty() {
        return Err(Error::Training("no training nodes".into()));
    }
    let first = targets[train_rows[0]];
    if train_rows.iter().all(|&r| targets[r] == first) {
        log::warn!("training split contains a single class");
    }
    let mut rng = stream_rng(seed, "sage.init");
    let mut model = SageClassifier::new(x.cols(), cfg.hidden, &mut rng);
    let mut state = AdamState::new(&model.params());
    let adam = AdamConfig { lr: cfg.lr, ..AdamConfig::default() };
    let adj = graph.und_adj();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        model.zero_grad();
        let (loss, logits) = model.loss_and_grad(adj, x, targets, train_rows)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
        }
        log.push(EpochLog { epoch, loss: f64::from(loss), train_acc: accuracy(&logits, targets, train_rows) });
        adam_step(model.params_mut(), &mut state, &adam)?;
    }
    Ok((model, log))
}
