use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Csr, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PageRankConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self { damping: 0.85, tol: 1e-10, max_iter: 1000 }
    }
}

/// Weighted power iteration where node `v` passes mass to the neighbors in
/// row `v` of `adj`, proportionally to multiplicity. Rows without weight
/// spread their mass uniformly.
pub fn pagerank_csr(adj: &Csr, cfg: &PageRankConfig) -> Result<Vec<f64>> {
    let n = adj.len();
    if n == 0 {
        return Err(Error::Data("PageRank over an empty graph".into()));
    }
    let nf = n as f64;
    let out_weight: Vec<f64> = (0..n as u32).map(|v| adj.weighted_degree(v) as f64).collect();
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..cfg.max_iter {
        let dangling: f64 = (0..n).filter(|&v| out_weight[v] == 0.0).map(|v| rank[v]).sum();
        let base = (1.0 - cfg.damping) / nf + cfg.damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for v in 0..n {
            if out_weight[v] == 0.0 {
                continue;
            }
            let share = cfg.damping * rank[v] / out_weight[v];
            for (u, w) in adj.entries(v as u32) {
                next[u as usize] += share * f64::from(w);
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < cfg.tol {
            break;
        }
    }
    Ok(rank)
}

/// Reputation flows from each actor to the users it acted upon.
pub fn pagerank(graph: &Graph, cfg: &PageRankConfig) -> Result<Vec<f64>> {
    pagerank_csr(graph.in_adj(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Label, NodeIndex};
    use std::sync::Arc;

    fn graph(n: usize, pairs: &[(u32, u32)]) -> Graph {
        let index = Arc::new(NodeIndex::new((0..n).map(|i| format!("n{i}"))));
        Graph::from_pairs(index, Arc::new(vec![Label::Benign; n]), pairs)
    }

    #[test]
    fn cycle_is_uniform() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let r = pagerank(&g, &PageRankConfig::default()).unwrap();
        for x in r {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_and_empty() {
        let g = graph(1, &[]);
        assert_eq!(pagerank(&g, &PageRankConfig::default()).unwrap(), vec![1.0]);
        let g = graph(0, &[]);
        assert!(pagerank(&g, &PageRankConfig::default()).is_err());
    }

    #[test]
    fn actors_endorse_targets() {
        // node 0 is acted upon by 1, 2, 3
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let r = pagerank(&g, &PageRankConfig::default()).unwrap();
        assert!(r[0] > r[1] && r[1] == r[2] && r[2] == r[3]);
    }
}
