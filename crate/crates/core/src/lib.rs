//! Temporal interaction-graph learning: coordinated-account detection with
//! GraphSAGE and snapshot-based link forecasting with a GNN-over-GRU model,
//! plus the data plumbing, baselines, metrics, and a distributed runtime
//! around them.

pub mod baselines;
pub mod canonical;
pub mod codec;
pub mod dist;
pub mod error;
pub mod eval;
pub mod features;
pub mod forecast;
pub mod graph;
pub mod ingest;
pub mod nn;
pub mod sage;
pub mod seed;
pub mod synth;

pub use error::{Category, Error, Result};
