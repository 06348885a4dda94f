use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::nn::Checkpoint;
use crate::seed::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(D))`.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_leaf: 1, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    /// Class counts of the bootstrap rows reaching this leaf.
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub classes: usize,
    pub features: usize,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Fraction of trees voting for class 1.
    pub probability: f64,
}

fn argmax_low(counts: &[u32]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn gini(counts: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = f64::from(total);
    1.0 - counts.iter().map(|&c| (f64::from(c) / t).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: Rng,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.classes];
        rows.iter().for_each(|&r| c[self.y[r]] += 1);
        c
    }

    /// Best `(feature, threshold, gain)` among `mtry` random features.
    fn best_split(&mut self, rows: &[usize], counts: &[u32]) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let mut feats: Vec<usize> = (0..d).collect();
        for i in 0..self.mtry.min(d) {
            let j = self.rng.random_range(i..d);
            feats.swap(i, j);
        }
        let n = rows.len() as u32;
        let parent = gini(counts, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for &f in &feats[..self.mtry.min(d)] {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0u32; self.classes];
            for i in 0..sorted.len() - 1 {
                left[sorted[i].1] += 1;
                let nl = i as u32 + 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let nr = n - nl;
                if (nl as usize) < self.cfg.min_leaf || (nr as usize) < self.cfg.min_leaf {
                    continue;
                }
                let right: Vec<u32> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let child = (f64::from(nl) * gini(&left, nl) + f64::from(nr) * gini(&right, nr)) / f64::from(n);
                let gain = parent - child;
                if gain > 1e-12 && best.is_none_or(|(_, _, g)| gain > g) {
                    let mid = sorted[i].0 + (sorted[i + 1].0 - sorted[i].0) / 2.0;
                    best = Some((f, mid, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let counts = self.counts(&rows);
        self.nodes.push(TreeNode::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = self.cfg.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || rows.len() < 2 * self.cfg.min_leaf.max(1) {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, &counts) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&row| self.x[row][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id as usize] = TreeNode::Split { feature: feature as u32, threshold, left, right };
        id
    }
}

impl Tree {
    fn leaf(&self, row: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
                TreeNode::Leaf { counts } => return counts,
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax_low(self.leaf(row))
    }
}

impl ForestModel {
    /// Trains `n_trees` Gini trees on bootstrap samples; tree `i` draws from
    /// its own seed derived from `seed`.
    pub fn fit(x: &[Vec<f64>], y: &[usize], cfg: &ForestConfig, seed: u64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Training("random forest over an empty training set".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Shape(format!("{} rows for {} labels", x.len(), y.len())));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged feature rows".into()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        if cfg.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        let classes = y.iter().copied().max().unwrap_or(0).max(1) + 1;
        let mtry = cfg.max_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1));
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(seed, &format!("forest.tree.{i}")));
                let rows: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
                let mut b = Builder { x, y, classes, cfg, mtry, rng, nodes: Vec::new() };
                b.grow(rows, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Self { classes, features: d, seed, trees })
    }

    pub fn predict_one(&self, row: &[f64]) -> Prediction {
        let mut votes = vec![0u32; self.classes];
        self.trees.iter().for_each(|t| votes[t.predict(row)] += 1);
        let probability = f64::from(votes.get(1).copied().unwrap_or(0)) / self.trees.len() as f64;
        Prediction { class: argmax_low(&votes), probability }
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<Prediction> {
        rows.par_iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn to_section(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u32(1);
        w.len(self.classes);
        w.len(self.features);
        w.u64(self.seed);
        w.len(self.trees.len());
        for t in &self.trees {
            w.len(t.nodes.len());
            for n in &t.nodes {
                match n {
                    TreeNode::Split { feature, threshold, left, right } => {
                        w.u8(0);
                        w.u32(*feature);
                        w.f64(*threshold);
                        w.u32(*left);
                        w.u32(*right);
                    }
                    TreeNode::Leaf { counts } => {
                        w.u8(1);
                        w.u32s(counts);
                    }
                }
            }
        }
        w.finish()
    }

    pub fn from_section(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::Data(format!("unsupported forest payload version {version}")));
        }
        let classes = r.len()?;
        let features = r.len()?;
        let seed = r.u64()?;
        let n_trees = r.len()?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n = r.len()?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(match r.u8()? {
                    0 => TreeNode::Split { feature: r.u32()?, threshold: r.f64()?, left: r.u32()?, right: r.u32()? },
                    1 => TreeNode::Leaf { counts: r.u32s()? },
                    t => return Err(Error::Data(format!("unknown tree node tag {t}"))),
                });
            }
            let valid = nodes.iter().all(|node| match node {
                TreeNode::Split { feature, left, right, .. } => {
                    (*feature as usize) < features && (*left as usize) < n && (*right as usize) < n
                }
                TreeNode::Leaf { counts } => counts.len() == classes,
            });
            if n == 0 || !valid {
                return Err(Error::Data("malformed tree payload".into()));
            }
            trees.push(Tree { nodes });
        }
        if !r.is_empty() {
            return Err(Error::Data("trailing bytes after forest payload".into()));
        }
        Ok(Self { classes, features, seed, trees })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint { tensors: Vec::new(), sections: vec![(*b"TREE", self.to_section())] }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        Self::from_section(ck.section(b"TREE").ok_or_else(|| Error::Data("checkpoint has no TREE section".into()))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_label() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let m = ForestModel::fit(&x, &[0; 10], &ForestConfig { n_trees: 5, ..Default::default() }, 1).unwrap();
        let p = m.predict_one(&[3.0]);
        assert_eq!(p.class, 0);
        assert_eq!(p.probability, 0.0);
        let m = ForestModel::fit(&x, &[1; 10], &ForestConfig { n_trees: 5, ..Default::default() }, 1).unwrap();
        assert_eq!(m.predict_one(&[3.0]).probability, 1.0);
    }

    #[test]
    fn separable_line() {
        let x: Vec<Vec<f64>> = (-20..20).map(|i| vec![f64::from(i) + 0.5]).collect();
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] >= 0.0)).collect();
        let m = ForestModel::fit(&x, &y, &ForestConfig::default(), 3).unwrap();
        let pred = m.predict(&x);
        assert!(pred.iter().zip(&y).all(|(p, &t)| p.class == t));
    }

    #[test]
    fn deterministic_and_serializable() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let y: Vec<usize> = (0..50).map(|i| usize::from(i % 3 == 0)).collect();
        let cfg = ForestConfig { n_trees: 10, ..Default::default() };
        let a = ForestModel::fit(&x, &y, &cfg, 9).unwrap();
        let b = ForestModel::fit(&x, &y, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(ForestModel::from_section(&a.to_section()).unwrap(), a);
        assert!(ForestModel::fit(&[], &[], &cfg, 0).is_err());
    }
}
