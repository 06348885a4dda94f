use std::path::Path;

use coordnet::canonical::to_canonical_json;
use coordnet::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance for one run: rerunning with `config` on inputs of the same
/// digests reproduces every output byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub task: String,
    pub seed: u64,
    /// SHA-256 of the canonical resolved config without the fields that
    /// cannot change results (output directory and worker placement).
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let mut hashed = cfg.clone();
        hashed.out = Default::default();
        hashed.workers = 1;
        hashed.dist = Default::default();
        hashed.listen = None;
        let config_hash = sha256_hex(to_canonical_json(&hashed)?.as_bytes());
        let mut inputs = Vec::new();
        for (role, path) in [
            ("records", &cfg.records),
            ("labels", &cfg.labels),
            ("embeddings", &cfg.embeddings),
            ("checkpoint", &cfg.checkpoint),
        ] {
            if let Some(p) = path {
                inputs.push(InputDigest { role: role.into(), path: p.display().to_string(), sha256: sha256_file(p)? });
            }
        }
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            task: cfg.task.map_or("", |t| t.name()).into(),
            seed: cfg.seed,
            config_hash,
            config: cfg.clone(),
            inputs,
            outputs: Vec::new(),
        })
    }
}
