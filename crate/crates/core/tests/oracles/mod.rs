//! Brute-force reference implementations and randomized fixtures. Each oracle
//! is written from the definition, without sharing code with the crate.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use coordnet::forecast::{sequence_loss_and_grad, ForecastModel, Variant};
use coordnet::graph::{Graph, Label, NodeIndex, SECONDS_PER_DAY};
use coordnet::ingest::{EdgeEvent, Relation};
use coordnet::nn::{
    bce_with_logits, binary_cross_entropy, cross_entropy, grad_check, mean_aggregate, mean_aggregate_backward,
    Activation, GradCheckReport, GruCell, Linear, Module, Parameter, Tensor,
};
use coordnet::sage::SageClassifier;
use coordnet::seed::{rng_from_seed, Rng};
use rand::Rng as _;

/// Step size and tolerance of the frozen finite-difference fixture.
pub const FD_STEP: f64 = 1e-3;
pub const FD_TOL: f64 = 1e-4;
/// Step for randomized draws, small enough that third-order truncation
/// stays far below the tolerance on arbitrary fixtures.
pub const FD_STEP_FINE: f64 = 1e-5;

/// AUC by counting every positive/negative pair, ties worth one half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Step-sum average precision: each distinct threshold contributes its
/// precision times the recall it adds.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let total_pos = labels.iter().filter(|&&l| l).count() as f64;
    let thresholds: BTreeSet<u64> = scores.iter().map(|s| s.to_bits()).collect();
    let mut ts: Vec<f64> = thresholds.into_iter().map(f64::from_bits).collect();
    ts.sort_by(|a, b| b.total_cmp(a));
    let mut ap = 0.0;
    for &t in &ts {
        let above = scores.iter().filter(|&&s| s >= t).count() as f64;
        let tp = scores.iter().zip(labels).filter(|&(&s, &l)| l && s >= t).count() as f64;
        let at = scores.iter().zip(labels).filter(|&(&s, &l)| l && s == t).count() as f64;
        ap += tp / above * at / total_pos;
    }
    ap
}

/// Scores drawn from a small grid so ties are common, with both classes
/// present.
pub fn random_ranking_case(rng: &mut Rng) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..120);
    let grid = rng.random_range(2..30);
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let scores = (0..n).map(|_| rng.random_range(0..grid) as f64 / grid as f64).collect();
    (scores, labels)
}

/// Support-weighted precision, recall and F1 from an explicit confusion matrix.
pub fn brute_weighted_prf(pred: &[usize], truth: &[usize]) -> (f64, f64, f64) {
    let mut cm = [[0usize; 2]; 2];
    for (&p, &t) in pred.iter().zip(truth) {
        cm[t][p] += 1;
    }
    let n = pred.len() as f64;
    let (mut p_w, mut r_w, mut f_w) = (0.0, 0.0, 0.0);
    for c in 0..2 {
        let tp = cm[c][c] as f64;
        let predicted = (cm[0][c] + cm[1][c]) as f64;
        let actual = (cm[c][0] + cm[c][1]) as f64;
        let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let r = if actual > 0.0 { tp / actual } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        p_w += actual / n * p;
        r_w += actual / n * r;
        f_w += actual / n * f;
    }
    (p_w, r_w, f_w)
}

/// Directed multigraph with dense ids `0..n`, self-loops excluded.
pub fn random_pairs(rng: &mut Rng, n: usize, m: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(m);
    while out.len() < m && n > 1 {
        let u = rng.random_range(0..n as u32);
        let v = rng.random_range(0..n as u32);
        if u != v {
            out.push((u, v));
        }
    }
    out
}

pub fn graph_of(n: usize, pairs: &[(u32, u32)], labels: Vec<Label>) -> Graph {
    let index = Arc::new(NodeIndex::new((0..n).map(|i| format!("u{i:05}"))));
    Graph::from_pairs(index, Arc::new(labels), pairs)
}

pub fn unlabeled_graph(n: usize, pairs: &[(u32, u32)]) -> Graph {
    graph_of(n, pairs, vec![Label::Benign; n])
}

/// Dense PageRank where each edge `(u, v)` moves mass from actor `v` to `u`.
/// Iterates the textbook update to a fixed point without renormalizing.
pub fn dense_pagerank(n: usize, pairs: &[(u32, u32)], damping: f64) -> Vec<f64> {
    let mut w = vec![vec![0.0f64; n]; n];
    for &(u, v) in pairs {
        w[v as usize][u as usize] += 1.0;
    }
    let out: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let dangling: f64 = (0..n).filter(|&v| out[v] == 0.0).map(|v| r[v]).sum();
        let mut next = vec![(1.0 - damping) / n as f64 + damping * dangling / n as f64; n];
        for v in 0..n {
            if out[v] == 0.0 {
                continue;
            }
            for u in 0..n {
                if w[v][u] > 0.0 {
                    next[u] += damping * r[v] * w[v][u] / out[v];
                }
            }
        }
        let change: f64 = r.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        r = next;
        if change < 1e-15 {
            break;
        }
    }
    r
}

/// Distinct undirected neighbor sets.
pub fn neighbor_sets(n: usize, pairs: &[(u32, u32)]) -> Vec<BTreeSet<u32>> {
    let mut nb = vec![BTreeSet::new(); n];
    for &(u, v) in pairs {
        if u != v {
            nb[u as usize].insert(v);
            nb[v as usize].insert(u);
        }
    }
    nb
}

pub fn brute_centrality(n: usize, pairs: &[(u32, u32)]) -> Vec<f64> {
    let nb = neighbor_sets(n, pairs);
    let max = nb.iter().map(BTreeSet::len).max().unwrap_or(0);
    nb.iter().map(|s| if max == 0 { 0.0 } else { s.len() as f64 / max as f64 }).collect()
}

/// `[troll, benign]` counts over distinct in-, out- and undirected neighbors.
pub fn brute_label_counts(n: usize, pairs: &[(u32, u32)], troll: &[bool]) -> Vec<[[f64; 2]; 3]> {
    let mut ins = vec![BTreeSet::new(); n];
    let mut outs = vec![BTreeSet::new(); n];
    for &(u, v) in pairs {
        outs[u as usize].insert(v);
        ins[v as usize].insert(u);
    }
    let und = neighbor_sets(n, pairs);
    let count = |s: &BTreeSet<u32>| {
        let t = s.iter().filter(|&&u| troll[u as usize]).count() as f64;
        [t, s.len() as f64 - t]
    };
    (0..n).map(|v| [count(&ins[v]), count(&outs[v]), count(&und[v])]).collect()
}

/// Event counts per window `[t0 + kδ, t0 + (k+1)δ)` from the first window to
/// the last nonempty one.
pub fn window_counts(ts: &[i64], t0: i64, delta: i64) -> Vec<usize> {
    let mut map: BTreeMap<i64, usize> = BTreeMap::new();
    for &t in ts {
        *map.entry((t - t0).div_euclid(delta)).or_default() += 1;
    }
    let last = map.keys().next_back().copied().unwrap_or(-1);
    (0..=last).map(|k| map.get(&k).copied().unwrap_or(0)).collect()
}

/// Exhaustive scan over the candidate grid: the first `δ` whose windows all
/// hold at least `min_edges`, or the first candidate covering the whole span.
pub fn scan_delta(ts: &[i64], min_edges: usize, step: i64) -> (i64, bool) {
    let t0 = *ts.iter().min().unwrap();
    let span = ts.iter().max().unwrap() - t0 + 1;
    for k in 1.. {
        let delta = k * step;
        if window_counts(ts, t0, delta).iter().all(|&c| c >= min_edges) {
            return (delta, true);
        }
        if delta >= span {
            return (delta, false);
        }
    }
    unreachable!()
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

/// Values bounded away from zero so ReLU kinks stay out of the difference
/// stencil.
fn away_from_zero(rng: &mut Rng, rows: usize, cols: usize) -> Tensor<f64> {
    let data = (0..rows * cols)
        .map(|_| {
            let m = rng.random_range(0.1..1.5);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

/// Zero-initialized biases put ReLU pre-activations of nodes with dead inputs
/// exactly on the kink; random biases move them off it.
fn randomize_biases<M: Module<f64>>(model: &mut M, rng: &mut Rng) {
    for p in model.params_mut() {
        if p.name.ends_with(".b") || p.name.contains(".b_") {
            p.value.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
}

fn weighted_sum(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Gated cell with its inputs exposed as parameters.
struct GruWithInputs {
    cell: GruCell<f64>,
    x: Parameter<f64>,
    h: Parameter<f64>,
}

impl Module<f64> for GruWithInputs {
    fn params(&self) -> Vec<&Parameter<f64>> {
        let mut v = self.cell.params();
        v.push(&self.x);
        v.push(&self.h);
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<f64>> {
        let mut v = self.cell.params_mut();
        v.push(&mut self.x);
        v.push(&mut self.h);
        v
    }
}

/// Six nodes in two loosely joined triangles plus a pendant.
pub fn six_node_graph(extra: &[(u32, u32)]) -> Graph {
    let mut pairs = vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (2, 3)];
    pairs.extend_from_slice(extra);
    let labels = vec![Label::Troll, Label::Troll, Label::Benign, Label::Benign, Label::Benign, Label::Troll];
    graph_of(6, &pairs, labels)
}

fn composite_check(variant: Variant, seed: u64, h: f64) -> GradCheckReport {
    let mut rng = rng_from_seed(seed);
    let graphs = [six_node_graph(&[]), six_node_graph(&[(0, 5), (1, 4)]), six_node_graph(&[(5, 0), (3, 1)])];
    let adj: Vec<_> = graphs.iter().map(Graph::und_adj).collect();
    let features: Vec<Tensor<f64>> = (0..3).map(|_| random_matrix(&mut rng, 6, 4, -1.0, 1.0)).collect();
    let tasks = vec![
        (1, vec![(0, 1), (0, 5), (1, 4)], vec![(2, 4), (3, 5), (0, 3)]),
        (2, vec![(0, 5), (1, 3), (4, 5)], vec![(1, 2), (2, 5), (0, 4)]),
    ];
    let mut model = ForecastModel::<f64>::new(variant, 4, 5, 3, &mut rng);
    randomize_biases(&mut model, &mut rng);
    grad_check(
        &mut model,
        |m| sequence_loss_and_grad(m, &adj, &features, &tasks).unwrap(),
        h,
        FD_TOL,
    )
}

/// Central-difference checks with step `h` of every differentiable kernel,
/// by name. Shapes are drawn from `seed`; the composite fixture is always six
/// nodes over three snapshots.
pub fn gradient_reports(seed: u64, h: f64) -> Vec<(String, GradCheckReport)> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    let (rows, cols, width) = (rng.random_range(2..7), rng.random_range(2..6), rng.random_range(2..6));

    let mut lin = Linear::<f64>::new("lin", cols, width, &mut rng);
    randomize_biases(&mut lin, &mut rng);
    let x = random_matrix(&mut rng, rows, cols, -1.0, 1.0);
    let r = random_matrix(&mut rng, rows, width, -1.0, 1.0);
    let rep = grad_check(
        &mut lin,
        |m| {
            let y = m.forward(&x).unwrap();
            m.backward(&x, &r).unwrap();
            weighted_sum(&y, &r)
        },
        h,
        FD_TOL,
    );
    out.push(("linear".to_string(), rep));

    for act in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
        let mut ps = vec![Parameter::new("x", away_from_zero(&mut rng, rows, cols))];
        let r = random_matrix(&mut rng, rows, cols, -1.0, 1.0);
        let rep = grad_check(
            &mut ps,
            |p| {
                let y = act.forward(&p[0].value);
                let dx = act.backward(&y, &r).unwrap();
                p[0].accumulate(&dx).unwrap();
                weighted_sum(&y, &r)
            },
            h,
            FD_TOL,
        );
        out.push((format!("activation.{act:?}").to_lowercase(), rep));
    }

    let pairs = random_pairs(&mut rng, 20, 45);
    let g = unlabeled_graph(20, &pairs);
    let mut ps = vec![Parameter::new("h", random_matrix(&mut rng, 20, cols, -1.0, 1.0))];
    let r = random_matrix(&mut rng, 20, cols, -1.0, 1.0);
    let rep = grad_check(
        &mut ps,
        |p| {
            let m = mean_aggregate(g.und_adj(), &p[0].value).unwrap();
            let dh = mean_aggregate_backward(g.und_adj(), &r).unwrap();
            p[0].accumulate(&dh).unwrap();
            weighted_sum(&m, &r)
        },
        h,
        FD_TOL,
    );
    out.push(("mean_aggregate".to_string(), rep));

    let mut gru = GruWithInputs {
        cell: GruCell::new("gru", cols, width, &mut rng),
        x: Parameter::new("x", random_matrix(&mut rng, rows, cols, -1.0, 1.0)),
        h: Parameter::new("h", random_matrix(&mut rng, rows, width, -0.9, 0.9)),
    };
    randomize_biases(&mut gru, &mut rng);
    let r = random_matrix(&mut rng, rows, width, -1.0, 1.0);
    let rep = grad_check(
        &mut gru,
        |m| {
            let step = m.cell.forward(&m.x.value, &m.h.value).unwrap();
            let (dx, dh) = m.cell.backward(&step, &r).unwrap();
            m.x.accumulate(&dx).unwrap();
            m.h.accumulate(&dh).unwrap();
            weighted_sum(&step.h, &r)
        },
        h,
        FD_TOL,
    );
    out.push(("gru".to_string(), rep));

    let targets: Vec<usize> = (0..rows).map(|i| i % 2).collect();
    let mut ps = vec![Parameter::new("logits", random_matrix(&mut rng, rows, 2, -2.0, 2.0))];
    let rep = grad_check(
        &mut ps,
        |p| {
            let (l, g) = cross_entropy(&p[0].value, &targets).unwrap();
            p[0].accumulate(&g).unwrap();
            l
        },
        h,
        FD_TOL,
    );
    out.push(("cross_entropy".to_string(), rep));

    let ys = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
    let mut ps = vec![Parameter::new("scores", random_matrix(&mut rng, 1, 6, -3.0, 3.0))];
    let rep = grad_check(
        &mut ps,
        |p| {
            let (l, g) = bce_with_logits(p[0].value.data(), &ys).unwrap();
            p[0].accumulate(&Tensor::from_vec(&[1, 6], g).unwrap()).unwrap();
            l
        },
        h,
        FD_TOL,
    );
    out.push(("bce_with_logits".to_string(), rep));

    let mut ps = vec![Parameter::new("probs", random_matrix(&mut rng, 1, 6, 0.05, 0.95))];
    let rep = grad_check(
        &mut ps,
        |p| {
            let (l, g) = binary_cross_entropy(p[0].value.data(), &ys).unwrap();
            p[0].accumulate(&Tensor::from_vec(&[1, 6], g).unwrap()).unwrap();
            l
        },
        h,
        FD_TOL,
    );
    out.push(("binary_cross_entropy".to_string(), rep));

    let g = six_node_graph(&[]);
    let x = random_matrix(&mut rng, 6, 4, -1.0, 1.0);
    let y = [1, 1, 0, 0, 0, 1];
    let mut clf = SageClassifier::<f64>::new(4, width, &mut rng);
    randomize_biases(&mut clf, &mut rng);
    let rep = grad_check(
        &mut clf,
        |m| m.loss_and_grad(g.und_adj(), &x, &y, &[0, 1, 2, 3, 4, 5]).unwrap().0,
        h,
        FD_TOL,
    );
    out.push(("sage.cross_entropy".to_string(), rep));

    out.push(("sage_gru.recurrent".to_string(), composite_check(Variant::Recurrent, seed ^ 1, h)));
    out.push(("sage_gru.static".to_string(), composite_check(Variant::Static, seed ^ 2, h)));
    out
}

/// One reply edge per timestamp between distinct random users.
pub fn events(ts: &[i64], rng: &mut Rng, users: usize) -> Vec<EdgeEvent> {
    ts.iter()
        .map(|&t| {
            let u = rng.random_range(0..users);
            let v = (u + rng.random_range(1..users)) % users;
            EdgeEvent { source: format!("u{u:03}"), target: format!("u{v:03}"), timestamp: t, relation: Relation::Reply }
        })
        .collect()
}

/// Bursty day-granular stream: some days dense, some sparse, some empty.
pub fn random_stream(rng: &mut Rng) -> Vec<i64> {
    let days = rng.random_range(1..25);
    let mut ts = Vec::new();
    for d in 0..days {
        let count = match rng.random_range(0..4) {
            0 => 0,
            1 => rng.random_range(0..6),
            _ => rng.random_range(0..30),
        };
        for _ in 0..count {
            ts.push(d * SECONDS_PER_DAY + rng.random_range(0..SECONDS_PER_DAY));
        }
    }
    if ts.is_empty() {
        ts.push(rng.random_range(0..SECONDS_PER_DAY));
    }
    ts
}
