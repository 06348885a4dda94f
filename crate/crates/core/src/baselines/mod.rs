//! Comparison methods: PageRank scores, per-user tabular features, a random
//! forest classifier, and stratified k-fold cross-validation.

mod cv;
mod forest;
mod pagerank;
mod tabular;

pub use cv::{cross_validate, kfold_indices, CvOutcome};
pub use forest::{ForestConfig, ForestModel, Prediction, Tree, TreeNode};
pub use pagerank::{pagerank, pagerank_csr, PageRankConfig};
pub use tabular::{tabular_features, TabularTable};
