use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed::Rng;

/// Prefix sums over nonnegative integer weights with point updates.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    pub(crate) fn new(weights: &[u64]) -> Self {
        let mut f = Self { tree: vec![0; weights.len() + 1] };
        for (i, &w) in weights.iter().enumerate() {
            f.add(i, w);
        }
        f
    }

    pub(crate) fn add(&mut self, i: usize, w: u64) {
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += w;
            k += k & k.wrapping_neg();
        }
    }

    pub(crate) fn total(&self) -> u64 {
        let mut k = self.tree.len() - 1;
        let mut s = 0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    pub(crate) fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[derive(Debug, Clone)]
pub struct BaOutcome {
    pub graph: Graph,
    /// Added directed edges `(source, target)` in insertion order.
    pub added: Vec<(u32, u32)>,
}

/// Adds exactly `n_new_edges` edges among `benign`: each round picks a source
/// uniformly and attaches it to up to `m` distinct other benign nodes drawn
/// with probability proportional to undirected degree + 1, with degrees
/// updated after every edge.
pub fn ba_augment(graph: &Graph, benign: &[u32], n_new_edges: usize, m: usize, rng: &mut Rng) -> Result<BaOutcome> {
    if n_new_edges == 0 {
        return Ok(BaOutcome { graph: graph.clone(), added: Vec::new() });
    }
    let mut pool: Vec<u32> = benign.to_vec();
    pool.sort_unstable();
    pool.dedup();
    if pool.len() < 2 {
        return Err(Error::Config(format!("augmentation needs at least 2 benign nodes, got {}", pool.len())));
    }
    if let Some(&v) = pool.iter().find(|&&v| v as usize >= graph.node_count() || graph.label(v).is_troll()) {
        return Err(Error::Data(format!("node {v} is not a benign node of the graph")));
    }
    if m == 0 {
        return Err(Error::Config("attachment count m must be positive".into()));
    }
    let m = m.min(pool.len() - 1);
    let und = graph.und_adj();
    let weights: Vec<u64> = pool.iter().map(|&v| und.weighted_degree(v) + 1).collect();
    let mut fen = Fenwick::new(&weights);
    let mut added = Vec::with_capacity(n_new_edges);
    let mut chosen = Vec::with_capacity(m);
    while added.len() < n_new_edges {
        let s = rng.random_range(0..pool.len());
        chosen.clear();
        let want = m.min(n_new_edges - added.len());
        while chosen.len() < want {
            let t = fen.find(rng.random_range(0..fen.total()));
            if t != s && !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            added.push((pool[s], pool[t]));
            fen.add(s, 1);
            fen.add(t, 1);
        }
    }
    let edges: Vec<(u32, u32, u32)> = graph.edges().chain(added.iter().map(|&(u, v)| (u, v, 1))).collect();
    let out = Graph::from_weighted(graph.index().clone(), graph.labels().clone(), edges.into_iter());
    Ok(BaOutcome { graph: out, added })
}
