//! Interaction graphs in compressed sparse row form and their partition into
//! fixed-width temporal snapshots over one shared node set.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::ingest::{EdgeEvent, UserLabel};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Bijection between user ids and dense node ids, ordered by user id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeIndex {
    ids: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl NodeIndex {
    pub fn new<I, S>(users: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids: Vec<String> = users.into_iter().map(Into::into).collect();
        ids.sort();
        ids.dedup();
        let lookup = ids.iter().enumerate().map(|(i, u)| (u.clone(), i as u32)).collect();
        Self { ids, lookup }
    }

    pub fn from_events(events: &[EdgeEvent]) -> Self {
        Self::new(events.iter().flat_map(|e| [e.source.as_str(), e.target.as_str()]))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, user: &str) -> Option<u32> {
        self.lookup.get(user).copied()
    }

    pub fn require(&self, user: &str) -> Result<u32> {
        self.get(user).ok_or_else(|| Error::UnknownNode(user.to_string()))
    }

    pub fn user(&self, id: u32) -> &str {
        &self.ids[id as usize]
    }

    pub fn users(&self) -> &[String] {
        &self.ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Troll,
    Benign,
    Unknown,
}

impl Label {
    /// Unknown nodes are modeled as benign.
    pub fn is_troll(self) -> bool {
        self == Label::Troll
    }

    fn code(self) -> u8 {
        match self {
            Label::Troll => 1,
            Label::Benign => 0,
            Label::Unknown => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Label::Benign),
            1 => Ok(Label::Troll),
            2 => Ok(Label::Unknown),
            other => Err(Error::Data(format!("invalid label code {other}"))),
        }
    }
}

/// Per-node labels resolved against a node index.
pub fn resolve_labels(index: &NodeIndex, labels: &BTreeMap<String, UserLabel>) -> (Vec<Label>, usize) {
    let mut unknown = 0;
    let out = index
        .users()
        .iter()
        .map(|u| match labels.get(u) {
            Some(UserLabel::Troll) => Label::Troll,
            Some(UserLabel::Benign) => Label::Benign,
            None => {
                unknown += 1;
                Label::Unknown
            }
        })
        .collect();
    (out, unknown)
}

/// Node index over edge endpoints and labeled users, with resolved labels.
pub fn labeled_index(events: &[EdgeEvent], labels: &BTreeMap<String, UserLabel>) -> (Arc<NodeIndex>, Arc<Vec<Label>>) {
    let users = events.iter().flat_map(|e| [e.source.as_str(), e.target.as_str()]).chain(labels.keys().map(String::as_str));
    let index = NodeIndex::new(users);
    let (resolved, _) = resolve_labels(&index, labels);
    (Arc::new(index), Arc::new(resolved))
}

/// Aggregate graph over all events with labels attached; labeled users
/// without events become isolated nodes.
pub fn build_labeled(events: &[EdgeEvent], labels: &BTreeMap<String, UserLabel>) -> Result<Graph> {
    let (index, resolved) = labeled_index(events, labels);
    Ok(Graph::from_events(index, events)?.with_labels(resolved))
}

/// Compressed adjacency: the neighbors of `v` are
/// `neighbors[offsets[v]..offsets[v+1]]`, sorted ascending, with parallel
/// multiplicities in `weights`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csr {
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
    weights: Vec<u32>,
}

impl Csr {
    /// Builds from `(row, col)` pairs; duplicates collapse into weights.
    fn from_pairs(n: usize, pairs: impl Iterator<Item = (u32, u32, u32)>) -> Self {
        let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for (r, c, w) in pairs {
            rows[r as usize].push((c, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, w) in row.iter() {
                if neighbors.len() > *offsets.last().unwrap() as usize && *neighbors.last().unwrap() == c {
                    *weights.last_mut().unwrap() += w;
                } else {
                    neighbors.push(c);
                    weights.push(w);
                }
            }
            offsets.push(neighbors.len() as u32);
        }
        Self { offsets, neighbors, weights }
    }

    /// Number of rows (nodes).
    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self, v: u32) -> std::ops::Range<usize> {
        self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.range(v)]
    }

    pub fn weights(&self, v: u32) -> &[u32] {
        &self.weights[self.range(v)]
    }

    pub fn entries(&self, v: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let r = self.range(v);
        self.neighbors[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn weighted_degree(&self, v: u32) -> u64 {
        self.weights(v).iter().map(|&w| u64::from(w)).sum()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().map(|&w| u64::from(w)).sum()
    }

    pub fn nnz(&self) -> usize {
        self.neighbors.len()
    }
}

/// Directed interaction multigraph. Edge `(u, v)` means `v` acted on `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    index: Arc<NodeIndex>,
    labels: Arc<Vec<Label>>,
    out: Csr,
    inc: Csr,
    und: Csr,
}

impl Graph {
    /// Builds from dense-id pairs `(source, target)` over a given node index.
    pub fn from_pairs(index: Arc<NodeIndex>, labels: Arc<Vec<Label>>, pairs: &[(u32, u32)]) -> Self {
        Self::from_weighted(index, labels, pairs.iter().map(|&(u, v)| (u, v, 1)))
    }

    pub fn from_weighted(
        index: Arc<NodeIndex>,
        labels: Arc<Vec<Label>>,
        edges: impl Iterator<Item = (u32, u32, u32)> + Clone,
    ) -> Self {
        let n = index.len();
        assert_eq!(labels.len(), n, "label vector must cover the node index");
        let out = Csr::from_pairs(n, edges.clone());
        let inc = Csr::from_pairs(n, edges.clone().map(|(u, v, w)| (v, u, w)));
        let und = Csr::from_pairs(
            n,
            edges.filter(|&(u, v, _)| u != v).flat_map(|(u, v, w)| [(u, v, w), (v, u, w)]),
        );
        Self { index, labels, out, inc, und }
    }

    /// One node per distinct user; parallel edges become multiplicities.
    /// All nodes start as `Unknown`; see [`Graph::with_labels`].
    pub fn build(events: &[EdgeEvent]) -> Self {
        let index = Arc::new(NodeIndex::from_events(events));
        Self::from_events(index, events).expect("index built from the same events")
    }

    pub fn from_events(index: Arc<NodeIndex>, events: &[EdgeEvent]) -> Result<Self> {
        let labels = Arc::new(vec![Label::Unknown; index.len()]);
        let pairs = events
            .iter()
            .map(|e| Ok((index.require(&e.source)?, index.require(&e.target)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_pairs(index, labels, &pairs))
    }

    pub fn with_labels(mut self, labels: Arc<Vec<Label>>) -> Self {
        assert_eq!(labels.len(), self.node_count(), "label vector must cover the node index");
        self.labels = labels;
        self
    }

    pub fn index(&self) -> &Arc<NodeIndex> {
        &self.index
    }

    pub fn labels(&self) -> &Arc<Vec<Label>> {
        &self.labels
    }

    pub fn label(&self, v: u32) -> Label {
        self.labels[v as usize]
    }

    pub fn node_count(&self) -> usize {
        self.index.len()
    }

    /// Total edge multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.out.total_weight()
    }

    pub fn out_adj(&self) -> &Csr {
        &self.out
    }

    pub fn in_adj(&self) -> &Csr {
        &self.inc
    }

    /// Distinct undirected neighbors (self-loops excluded).
    pub fn und_adj(&self) -> &Csr {
        &self.und
    }

    pub fn out_degree(&self, v: u32) -> u64 {
        self.out.weighted_degree(v)
    }

    pub fn in_degree(&self, v: u32) -> u64 {
        self.inc.weighted_degree(v)
    }

    /// Distinct directed `(source, target, multiplicity)` triples in row order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        (0..self.node_count() as u32).flat_map(move |u| self.out.entries(u).map(move |(v, w)| (u, v, w)))
    }

    pub fn to_tgf(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(b"TGF1");
        w.u32(1);
        w.len(self.node_count());
        for (user, label) in self.index.users().iter().zip(self.labels.iter()) {
            w.str(user);
            w.u8(label.code());
        }
        w.u32s(&self.out.offsets);
        w.u32s(&self.out.neighbors);
        w.u32s(&self.out.weights);
        w.finish()
    }

    pub fn from_tgf(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.magic(b"TGF1")?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::Data(format!("unsupported TGF version {version}")));
        }
        let n = r.len()?;
        let mut users = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            users.push(r.str()?);
            labels.push(Label::from_code(r.u8()?)?);
        }
        let offsets = r.u32s()?;
        let neighbors = r.u32s()?;
        let weights = r.u32s()?;
        if !r.is_empty() {
            return Err(Error::Data("trailing bytes after TGF payload".into()));
        }
        let index = NodeIndex::new(users.iter().cloned());
        if index.users() != users.as_slice() {
            return Err(Error::Data("TGF node ids are not sorted and distinct".into()));
        }
        let nnz = neighbors.len();
        if offsets.len() != n + 1
            || weights.len() != nnz
            || offsets[0] != 0
            || offsets[n] as usize != nnz
            || offsets.windows(2).any(|w| w[0] > w[1])
            || neighbors.iter().any(|&c| c as usize >= n)
        {
            return Err(Error::Data("inconsistent TGF adjacency arrays".into()));
        }
        let mut triples = Vec::with_capacity(nnz);
        for u in 0..n {
            for k in offsets[u] as usize..offsets[u + 1] as usize {
                triples.push((u as u32, neighbors[k], weights[k]));
            }
        }
        let g = Self::from_weighted(Arc::new(index), Arc::new(labels), triples.into_iter());
        if g.out.neighbors != neighbors || g.out.weights != weights {
            return Err(Error::Data("TGF adjacency rows are not sorted and distinct".into()));
        }
        Ok(g)
    }

    /// Human-readable listing: one `user label` line per node, then one
    /// `source -> target xweight` line per distinct edge.
    pub fn text_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {} edges {}", self.node_count(), self.edge_count());
        for (user, label) in self.index.users().iter().zip(self.labels.iter()) {
            let _ = writeln!(s, "{user} {}", serde_json::to_string(label).unwrap_or_default().trim_matches('"'));
        }
        for (u, v, w) in self.edges() {
            let _ = writeln!(s, "{} -> {} x{w}", self.index.user(u), self.index.user(v));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub start: i64,
    pub graph: Graph,
}

#[derive(Debug, Clone)]
pub struct TemporalGraph {
    pub index: Arc<NodeIndex>,
    pub labels: Arc<Vec<Label>>,
    pub t0: i64,
    pub delta: i64,
    pub snapshots: Vec<Snapshot>,
}

impl TemporalGraph {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn graph(&self, t: usize) -> &Graph {
        &self.snapshots[t].graph
    }

    pub fn node_count(&self) -> usize {
        self.index.len()
    }
}

/// Bucket index of each event: `floor((ts - t0) / delta)`.
fn bucket(ts: i64, t0: i64, delta: i64) -> usize {
    (ts - t0).div_euclid(delta) as usize
}

/// Splits events into windows `[t0 + kδ, t0 + (k+1)δ)`. Interior empty
/// windows are emitted; nothing is emitted past the last event.
pub fn partition_snapshots(
    events: &[EdgeEvent],
    index: Arc<NodeIndex>,
    labels: Arc<Vec<Label>>,
    delta: i64,
    t0: i64,
) -> Result<TemporalGraph> {
    if delta <= 0 {
        return Err(Error::Config(format!("snapshot width must be positive, got {delta}")));
    }
    if let Some(e) = events.iter().find(|e| e.timestamp < t0) {
        return Err(Error::Data(format!("event at {} precedes window anchor {t0}", e.timestamp)));
    }
    let count = events.iter().map(|e| bucket(e.timestamp, t0, delta) + 1).max().unwrap_or(0);
    let mut buckets: Vec<Vec<(u32, u32)>> = vec![Vec::new(); count];
    for e in events {
        buckets[bucket(e.timestamp, t0, delta)].push((index.require(&e.source)?, index.require(&e.target)?));
    }
    let snapshots = buckets
        .iter()
        .enumerate()
        .map(|(k, pairs)| Snapshot {
            start: t0 + k as i64 * delta,
            graph: Graph::from_pairs(index.clone(), labels.clone(), pairs),
        })
        .collect();
    Ok(TemporalGraph { index, labels, t0, delta, snapshots })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSelection {
    pub delta: i64,
    /// False when no candidate met the bound and the full span was returned.
    pub satisfied: bool,
    pub snapshot_count: usize,
    pub min_snapshot_edges: usize,
}

fn bucket_counts(timestamps: &[i64], t0: i64, delta: i64) -> Vec<usize> {
    let count = timestamps.iter().map(|&ts| bucket(ts, t0, delta) + 1).max().unwrap_or(0);
    let mut counts = vec![0usize; count];
    for &ts in timestamps {
        counts[bucket(ts, t0, delta)] += 1;
    }
    counts
}

/// Smallest multiple of `step` for which every emitted snapshot (anchored at
/// the first event) holds at least `min_edges` events.
pub fn select_delta(timestamps: &[i64], min_edges: usize, step: i64) -> Result<DeltaSelection> {
    if step <= 0 {
        return Err(Error::Config(format!("candidate step must be positive, got {step}")));
    }
    let (Some(&t0), Some(&t1)) = (timestamps.iter().min(), timestamps.iter().max()) else {
        return Err(Error::Data("cannot select a snapshot width for an empty event stream".into()));
    };
    let span = t1 - t0 + 1;
    let mut k = 1;
    loop {
        let delta = k * step;
        let counts = bucket_counts(timestamps, t0, delta);
        let min = counts.iter().copied().min().unwrap_or(0);
        if min >= min_edges {
            return Ok(DeltaSelection { delta, satisfied: true, snapshot_count: counts.len(), min_snapshot_edges: min });
        }
        if delta >= span {
            log::warn!("no snapshot width up to the full span leaves every snapshot with {min_edges} edges");
            return Ok(DeltaSelection { delta, satisfied: false, snapshot_count: counts.len(), min_snapshot_edges: min });
        }
        k += 1;
    }
}
