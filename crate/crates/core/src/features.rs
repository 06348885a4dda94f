//! Per-node feature rows: detection topology, forecasting label aggregates,
//! and external text embeddings fused onto either.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ingest::InteractionRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<String>,
    pub start: usize,
}

impl FeatureGroup {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.columns.len()
    }
}

/// Dense row-major `rows × width` matrix with named column groups.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    groups: Vec<FeatureGroup>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, groups: &[(&str, &[&str])]) -> Self {
        let mut start = 0;
        let groups: Vec<FeatureGroup> = groups
            .iter()
            .map(|(name, cols)| {
                let g = FeatureGroup {
                    name: (*name).to_string(),
                    columns: cols.iter().map(|c| (*c).to_string()).collect(),
                    start,
                };
                start += cols.len();
                g
            })
            .collect();
        Self { rows, width: start, data: vec![0.0; rows * start], groups }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&FeatureGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, c))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Row-wise concatenation `[self ‖ other]`.
    pub fn concat(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!("cannot concatenate {} rows with {} rows", self.rows, other.rows)));
        }
        let width = self.width + other.width;
        let mut data = Vec::with_capacity(self.rows * width);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        let mut groups = self.groups.clone();
        groups.extend(other.groups.iter().map(|g| FeatureGroup { start: g.start + self.width, ..g.clone() }));
        Ok(FeatureMatrix { rows: self.rows, width, data, groups })
    }

    /// Copy without the named groups.
    pub fn without_groups(&self, drop: &[&str]) -> Result<FeatureMatrix> {
        for name in drop {
            if self.group(name).is_none() {
                return Err(Error::Config(format!("unknown feature group {name:?}")));
            }
        }
        let keep: Vec<&str> =
            self.groups.iter().map(|g| g.name.as_str()).filter(|n| !drop.contains(n)).collect();
        self.only_groups(&keep)
    }

    /// Copy keeping only the named groups, in their original order.
    pub fn only_groups(&self, keep: &[&str]) -> Result<FeatureMatrix> {
        let kept: Vec<&FeatureGroup> = self.groups.iter().filter(|g| keep.contains(&g.name.as_str())).collect();
        if kept.is_empty() {
            return Err(Error::Config("feature selection leaves no columns".into()));
        }
        let specs: Vec<(&str, Vec<&str>)> =
            kept.iter().map(|g| (g.name.as_str(), g.columns.iter().map(String::as_str).collect())).collect();
        let spec_refs: Vec<(&str, &[&str])> = specs.iter().map(|(n, c)| (*n, c.as_slice())).collect();
        let mut out = FeatureMatrix::new(self.rows, &spec_refs);
        for r in 0..self.rows {
            let mut c = 0;
            for g in &kept {
                for src in g.range() {
                    out.data[r * out.width + c] = self.get(r, src);
                    c += 1;
                }
            }
        }
        Ok(out)
    }

    /// Appends a group filled from a per-row closure.
    pub fn with_group(&self, name: &str, columns: &[&str], fill: impl Fn(usize) -> Vec<f64>) -> Result<Self> {
        let mut extra = FeatureMatrix::new(self.rows, &[(name, columns)]);
        for r in 0..self.rows {
            let v = fill(r);
            if v.len() != columns.len() {
                return Err(Error::Shape(format!("group {name} expects {} values, got {}", columns.len(), v.len())));
            }
            extra.row_mut(r).copy_from_slice(&v);
        }
        self.concat(&extra)
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&x| x as f32).collect()
    }
}

/// Column-wise z-score with statistics from a subset of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits on `rows` of `m`; zero-variance columns get unit scale.
    pub fn fit(m: &FeatureMatrix, rows: &[usize], columns: Range<usize>) -> Self {
        let columns: Vec<usize> = columns.collect();
        let n = rows.len().max(1) as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for &c in &columns {
            let mu = rows.iter().map(|&r| m.get(r, c)).sum::<f64>() / n;
            let var = rows.iter().map(|&r| (m.get(r, c) - mu).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(mu);
            std.push(if sd > 0.0 && sd.is_finite() { sd } else { 1.0 });
        }
        Self { columns, mean, std }
    }

    pub fn fit_stacked(ms: &[&FeatureMatrix], columns: Range<usize>) -> Self {
        let width = ms.first().map_or(0, |m| m.width);
        let rows: usize = ms.iter().map(|m| m.rows).sum();
        let mut stacked = FeatureMatrix { rows, width, data: Vec::with_capacity(rows * width), groups: vec![] };
        for m in ms {
            stacked.data.extend_from_slice(&m.data);
        }
        let all: Vec<usize> = (0..rows).collect();
        Self::fit(&stacked, &all, columns)
    }

    pub fn apply(&self, m: &mut FeatureMatrix) {
        for r in 0..m.rows {
            let row = m.row_mut(r);
            for (k, &c) in self.columns.iter().enumerate() {
                row[c] = (row[c] - self.mean[k]) / self.std[k];
            }
        }
    }
}

/// `|N(v)| / max_j |N(v_j)|` over distinct undirected neighbors; 0 when the
/// graph has no edges.
pub fn degree_centrality(graph: &Graph, v: u32) -> Result<f64> {
    if v as usize >= graph.node_count() {
        return Err(Error::UnknownNode(format!("node id {v}")));
    }
    Ok(degree_centralities(graph)[v as usize])
}

pub fn degree_centralities(graph: &Graph) -> Vec<f64> {
    let und = graph.und_adj();
    let n = graph.node_count() as u32;
    let max = (0..n).map(|v| und.neighbors(v).len()).max().unwrap_or(0);
    (0..n)
        .map(|v| if max == 0 { 0.0 } else { und.neighbors(v).len() as f64 / max as f64 })
        .collect()
}

pub const DEGREE: &str = "degree";
pub const CENTRALITY: &str = "centrality";
pub const EGONET: &str = "egonet";
pub const EMBEDDING: &str = "embedding";

/// Width-6 topology: in/out degree, degree centrality, average neighbor
/// degree, neighbor count, ego-net size.
pub fn detection_features(graph: &Graph) -> FeatureMatrix {
    let n = graph.node_count();
    let mut m = FeatureMatrix::new(
        n,
        &[
            (DEGREE, &["in_degree", "out_degree"]),
            (CENTRALITY, &["degree_centrality"]),
            (EGONET, &["avg_neighbor_degree", "num_neighbors", "ego_net_size"]),
        ],
    );
    let cent = degree_centralities(graph);
    let und = graph.und_adj();
    for v in 0..n as u32 {
        let nb = und.neighbors(v);
        let avg = if nb.is_empty() {
            0.0
        } else {
            nb.iter().map(|&u| und.neighbors(u).len() as f64).sum::<f64>() / nb.len() as f64
        };
        m.row_mut(v as usize).copy_from_slice(&[
            graph.in_degree(v) as f64,
            graph.out_degree(v) as f64,
            cent[v as usize],
            avg,
            nb.len() as f64,
            1.0 + nb.len() as f64,
        ]);
    }
    m
}

pub const LABEL_AGGREGATE_WIDTH: usize = 15;

/// Width-15 label aggregates over distinct neighbors; returns the matrix and
/// the number of unlabeled nodes treated as benign.
pub fn label_aggregates(graph: &Graph) -> (FeatureMatrix, usize) {
    let n = graph.node_count();
    let onehot = |v: u32| -> [f64; 2] {
        if graph.label(v).is_troll() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    };
    let unknown = graph.labels().iter().filter(|l| **l == crate::graph::Label::Unknown).count();
    let mut m = FeatureMatrix::new(
        n,
        &[
            ("self", &["self_troll", "self_benign"]),
            ("in_neighbors", &["in_sum_troll", "in_sum_benign", "in_mean_troll", "in_mean_benign"]),
            ("out_neighbors", &["out_sum_troll", "out_sum_benign", "out_mean_troll", "out_mean_benign"]),
            ("undirected", &["und_sum_troll", "und_sum_benign", "und_mean_troll", "und_mean_benign"]),
            (CENTRALITY, &["degree_centrality"]),
        ],
    );
    let cent = degree_centralities(graph);
    let aggregate = |nb: &[u32]| -> [f64; 4] {
        let mut s = [0.0, 0.0];
        for &u in nb {
            let h = onehot(u);
            s[0] += h[0];
            s[1] += h[1];
        }
        if nb.is_empty() {
            [0.0; 4]
        } else {
            let k = nb.len() as f64;
            [s[0], s[1], s[0] / k, s[1] / k]
        }
    };
    for v in 0..n as u32 {
        let row = m.row_mut(v as usize);
        row[0..2].copy_from_slice(&onehot(v));
        row[2..6].copy_from_slice(&aggregate(graph.in_adj().neighbors(v)));
        row[6..10].copy_from_slice(&aggregate(graph.out_adj().neighbors(v)));
        row[10..14].copy_from_slice(&aggregate(graph.und_adj().neighbors(v)));
        row[14] = cent[v as usize];
    }
    (m, unknown)
}

/// User id → fixed-width vector, tagged with the provider that produced it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    pub provider: String,
    dim: usize,
    vectors: BTreeMap<String, Vec<f32>>,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    user_id: String,
    vector: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(provider: impl Into<String>, dim: usize) -> Self {
        Self { provider: provider.into(), dim, vectors: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, user: &str) -> Option<&[f32]> {
        self.vectors.get(user).map(Vec::as_slice)
    }

    pub fn insert(&mut self, user: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        if self.vectors.is_empty() && self.dim == 0 {
            self.dim = vector.len();
        }
        if vector.len() != self.dim {
            return Err(Error::Shape(format!("embedding width {} does not match table width {}", vector.len(), self.dim)));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("embedding contains non-finite values".into()));
        }
        self.vectors.insert(user.into(), vector);
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R, provider: &str) -> Result<Self> {
        let mut table = Self::new(provider, 0);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: EmbeddingLine =
                serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            table.insert(parsed.user_id, parsed.vector)?;
        }
        Ok(table)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for (user, vector) in &self.vectors {
            let line = serde_json::to_string(&EmbeddingLine { user_id: user.clone(), vector: vector.clone() })?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// `EMB1` container: magic, u32 version, provider string, u32 width,
    /// u32 count, then per row a user string and `width` f32 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(b"EMB1");
        w.u32(1);
        w.str(&self.provider);
        w.len(self.dim);
        w.len(self.vectors.len());
        for (user, v) in &self.vectors {
            w.str(user);
            w.f32s(v);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(b"EMB1")?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::Data(format!("unsupported EMB version {version}")));
        }
        let provider = r.str()?;
        let dim = r.u32()? as usize;
        let count = r.len()?;
        let mut table = Self::new(provider, dim);
        for _ in 0..count {
            let user = r.str()?;
            let v = r.f32s(dim)?;
            table.insert(user, v)?;
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(b"EMB1") {
            Self::from_bytes(&bytes)
        } else {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Self::read_jsonl(bytes.as_slice(), &name)
        }
    }
}

/// `[topo ‖ embedding]` per node; nodes absent from the table get zeros.
/// Returns the fused matrix and the count of missing nodes.
pub fn fuse_embeddings(topo: &FeatureMatrix, graph: &Graph, table: &EmbeddingTable) -> Result<(FeatureMatrix, usize)> {
    if topo.rows() != graph.node_count() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", topo.rows(), graph.node_count())));
    }
    let names: Vec<String> = (0..table.dim()).map(|i| format!("emb_{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut missing = 0;
    let fused = topo.with_group(EMBEDDING, &refs, |r| match table.get(graph.index().user(r as u32)) {
        Some(v) => v.iter().map(|&x| f64::from(x)).collect(),
        None => vec![0.0; table.dim()],
    })?;
    for r in 0..topo.rows() {
        if table.get(graph.index().user(r as u32)).is_none() {
            missing += 1;
        }
    }
    Ok((fused, missing))
}

/// A text-embedding backend. Implementations return one vector per input.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 4, base_delay_ms: 200 }
    }
}

/// Calls the provider, doubling the wait after each failure.
pub fn embed_with_retry(provider: &dyn EmbeddingProvider, texts: &[String], policy: RetryPolicy) -> Result<Vec<Vec<f32>>> {
    let mut attempt = 0;
    loop {
        match provider.embed(texts) {
            Ok(v) if v.len() == texts.len() => return Ok(v),
            Ok(v) => {
                return Err(Error::Provider(format!("provider returned {} vectors for {} texts", v.len(), texts.len())))
            }
            Err(e) => {
                attempt += 1;
                if attempt >= policy.max_attempts.max(1) {
                    return Err(Error::Provider(format!("{} failed after {attempt} attempts: {e}", provider.name())));
                }
                let wait = policy.base_delay_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("{} attempt {attempt} failed ({e}); retrying in {wait} ms", provider.name());
                thread::sleep(Duration::from_millis(wait));
            }
        }
    }
}

/// Packs posts into chunks of at most `char_budget` characters; oversized
/// posts are split at character boundaries.
pub fn chunk_posts(posts: &[String], char_budget: usize) -> Vec<String> {
    let budget = char_budget.max(1);
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_len = 0;
    for post in posts {
        let chars: Vec<char> = post.chars().collect();
        for piece in chars.chunks(budget) {
            let extra = piece.len() + usize::from(current_len > 0);
            if current_len > 0 && current_len + extra > budget {
                chunks.push(std::mem::take(&mut current));
                current_len = 0;
            }
            if current_len > 0 {
                current.push('\n');
                current_len += 1;
            }
            current.extend(piece);
            current_len += piece.len();
        }
    }
    if current_len > 0 {
        chunks.push(current);
    }
    chunks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostEmbeddingConfig {
    pub max_posts: usize,
    pub chunk_char_budget: usize,
    pub batch_size: usize,
    pub retry: RetryPolicy,
}

impl Default for PostEmbeddingConfig {
    fn default() -> Self {
        Self { max_posts: 100, chunk_char_budget: 2000, batch_size: 32, retry: RetryPolicy::default() }
    }
}

/// Mean provider vector over the chunks of the `max_posts` most recent posts
/// (`posts` ordered most recent first). No posts yields `None`.
pub fn embed_user_posts(
    posts: &[String],
    provider: &dyn EmbeddingProvider,
    cfg: &PostEmbeddingConfig,
) -> Result<Option<Vec<f32>>> {
    let recent = &posts[..posts.len().min(cfg.max_posts)];
    let chunks = chunk_posts(recent, cfg.chunk_char_budget);
    if chunks.is_empty() {
        return Ok(None);
    }
    let mut sum: Vec<f64> = Vec::new();
    for batch in chunks.chunks(cfg.batch_size.max(1)) {
        for v in embed_with_retry(provider, batch, cfg.retry)? {
            if sum.is_empty() {
                sum = vec![0.0; v.len()];
            }
            if v.len() != sum.len() {
                return Err(Error::Shape(format!("provider width changed from {} to {}", sum.len(), v.len())));
            }
            sum.iter_mut().zip(&v).for_each(|(s, &x)| *s += f64::from(x));
        }
    }
    let k = chunks.len() as f64;
    Ok(Some(sum.into_iter().map(|s| (s / k) as f32).collect()))
}

/// Each author's post texts, most recent first (ties keep input order).
pub fn user_posts(records: &[InteractionRecord]) -> BTreeMap<String, Vec<String>> {
    let mut by_user: BTreeMap<String, Vec<(i64, usize, String)>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if let Some(text) = r.content() {
            by_user.entry(r.author.clone()).or_default().push((r.created_at, i, text));
        }
    }
    by_user
        .into_iter()
        .map(|(u, mut posts)| {
            posts.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            (u, posts.into_iter().map(|p| p.2).collect())
        })
        .collect()
}

/// Embeds every author. Users whose provider calls fail are logged and
/// skipped; the second value counts them.
pub fn build_embedding_table(
    records: &[InteractionRecord],
    provider: &dyn EmbeddingProvider,
    cfg: &PostEmbeddingConfig,
) -> Result<(EmbeddingTable, usize)> {
    let mut table = EmbeddingTable::new(provider.name(), 0);
    let mut failed = 0;
    for (user, posts) in user_posts(records) {
        match embed_user_posts(&posts, provider, cfg) {
            Ok(Some(v)) => table.insert(user, v)?,
            Ok(None) => {}
            Err(Error::Provider(msg)) => {
                log::warn!("embedding failed for {user}: {msg}");
                failed += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((table, failed))
}

/// Remote provider speaking `POST {base}/embed` with `{"texts": [...]}` and
/// answering `{"vectors": [[...]]}`.
pub struct HttpProvider {
    name: String,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

impl HttpProvider {
    /// Reads the bearer key from `api_key_env` if that variable is set.
    pub fn new(name: &str, base_url: &str, api_key_env: Option<&str>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        let api_key = api_key_env.and_then(|var| std::env::var(var).ok());
        Ok(Self {
            name: name.to_string(),
            endpoint: format!("{}/embed", base_url.trim_end_matches('/')),
            api_key,
            client,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let mut req = self.client.post(&self.endpoint).json(&EmbedRequest { texts });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Error::Provider(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Provider(format!("{} returned HTTP {status}", self.endpoint)));
        }
        let body: EmbedResponse = resp.json().map_err(|e| Error::Provider(e.to_string()))?;
        Ok(body.vectors)
    }
}

/// Offline provider: signed feature hashing of whitespace tokens, L2
/// normalized. Texts sharing tokens land near each other.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    pub dim: usize,
}

impl HashingProvider {
    fn token_hash(token: &str) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}

impl EmbeddingProvider for HashingProvider {
    fn name(&self) -> &str {
        "hashing"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        Ok(texts
            .iter()
            .map(|t| {
                let mut v = vec![0.0f32; self.dim];
                for tok in t.split_whitespace() {
                    let h = Self::token_hash(&tok.to_lowercase());
                    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                    v[(h % self.dim as u64) as usize] += sign;
                }
                let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|x| *x /= norm);
                }
                v
            })
            .collect())
    }
}
