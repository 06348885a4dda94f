//! Data-parallel forecasting over snapshot shards.
//!
//! A coordinator owns the model and optimizer; workers own contiguous
//! snapshot ranges and run the per-snapshot encoder forward, the transition
//! losses, and the encoder backward. The recurrent scan and the reduction
//! stay on the coordinator, so the arithmetic matches [`LocalExecutor`]
//! exactly for any worker count.
//!
//! Frames are `u32 len | u8 tag | payload | u32 crc32`, where `len` counts
//! the tag and payload and the checksum covers the same bytes.
//!
//! [`LocalExecutor`]: crate::forecast::LocalExecutor

use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::ops::Range;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::forecast::{
    encode_snapshot, run_loss_task, snapshot_encoder_grads, ForecastData, LossResult, LossTask, SnapshotExecutor,
};
use crate::nn::{Checkpoint, Linear, Module, Parameter, Tensor};
use crate::sage::{SageCache, SageEncoder};

/// Largest accepted frame body.
pub const MAX_FRAME: usize = 1 << 30;

/// Contiguous, balanced snapshot ranges; the first `t % k` shards hold one
/// extra snapshot and shards beyond `t` are empty.
pub fn shard_snapshots(t: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 {
        return Err(Error::Config("worker count must be positive".into()));
    }
    let (base, extra) = (t / k, t % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    ParamBroadcast = 1,
    SnapshotEmbeddings = 2,
    LossTask = 3,
    GradContribution = 4,
    Control = 5,
    UpstreamGrad = 6,
}

impl Tag {
    fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            1 => Tag::ParamBroadcast,
            2 => Tag::SnapshotEmbeddings,
            3 => Tag::LossTask,
            4 => Tag::GradContribution,
            5 => Tag::Control,
            6 => Tag::UpstreamGrad,
            _ => return Err(Error::Transport(format!("unknown message tag {v}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    /// Dataset check sent once per connection.
    Hello { fingerprint: u64, snapshots: u32 },
    /// Encode snapshots `start..end` with the current parameters.
    Encode { start: u32, end: u32 },
    /// Marks the end of a reply stream.
    Ack { count: u32 },
    Nack { reason: String },
    /// Drops cached state; the worker answers `Ack { count: nonce }`.
    Reset { nonce: u32 },
    Heartbeat,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    ParamBroadcast { version: u64, params: Checkpoint },
    SnapshotEmbeddings { version: u64, t: u32, h: Tensor<f32> },
    LossTask { version: u64, task: LossTask },
    /// A transition loss (`loss` set, one tensor `∂L/∂Z`) or a snapshot's
    /// encoder gradients (`loss` unset, one tensor per parameter).
    GradContribution { version: u64, t: u32, loss: Option<f32>, tensors: Vec<Tensor<f32>> },
    Control { version: u64, op: Control },
    UpstreamGrad { version: u64, t: u32, dh: Tensor<f32> },
}

fn put_tensor(w: &mut ByteWriter, t: &Tensor<f32>) {
    w.len(t.shape().len());
    t.shape().iter().for_each(|&d| w.len(d));
    w.f32s(t.data());
}

fn get_tensor(r: &mut ByteReader<'_>) -> Result<Tensor<f32>> {
    let rank = r.u32()? as usize;
    if rank > 4 {
        return Err(Error::Data(format!("tensor rank {rank} out of range")));
    }
    let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).filter(|&n| n <= r.remaining() / 4);
    let n = n.ok_or_else(|| Error::Data(format!("tensor shape {shape:?} exceeds the payload")))?;
    let data = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    Tensor::from_vec(&shape, data)
}

fn put_pairs(w: &mut ByteWriter, pairs: &[(u32, u32)]) {
    w.len(pairs.len());
    pairs.iter().for_each(|&(a, b)| {
        w.u32(a);
        w.u32(b);
    });
}

fn get_pairs(r: &mut ByteReader<'_>) -> Result<Vec<(u32, u32)>> {
    let n = r.u32()? as usize;
    if n > r.remaining() / 8 {
        return Err(Error::Data(format!("{n} pairs exceed the payload")));
    }
    (0..n).map(|_| Ok((r.u32()?, r.u32()?))).collect()
}

impl Message {
    pub fn tag(&self) -> Tag {
        match self {
            Message::ParamBroadcast { .. } => Tag::ParamBroadcast,
            Message::SnapshotEmbeddings { .. } => Tag::SnapshotEmbeddings,
            Message::LossTask { .. } => Tag::LossTask,
            Message::GradContribution { .. } => Tag::GradContribution,
            Message::Control { .. } => Tag::Control,
            Message::UpstreamGrad { .. } => Tag::UpstreamGrad,
        }
    }

    pub fn version(&self) -> u64 {
        match self {
            Message::ParamBroadcast { version, .. }
            | Message::SnapshotEmbeddings { version, .. }
            | Message::LossTask { version, .. }
            | Message::GradContribution { version, .. }
            | Message::Control { version, .. }
            | Message::UpstreamGrad { version, .. } => *version,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.u64(self.version());
        match self {
            Message::ParamBroadcast { params, .. } => {
                let bytes = params.to_bytes();
                w.len(bytes.len());
                w.bytes(&bytes);
            }
            Message::SnapshotEmbeddings { t, h, .. } => {
                w.u32(*t);
                put_tensor(&mut w, h);
            }
            Message::LossTask { task, .. } => {
                w.len(task.target);
                put_tensor(&mut w, &task.z);
                put_pairs(&mut w, &task.positives);
                put_pairs(&mut w, &task.negatives);
            }
            Message::GradContribution { t, loss, tensors, .. } => {
                w.u32(*t);
                match loss {
                    Some(l) => {
                        w.u8(1);
                        w.f32(*l);
                    }
                    None => w.u8(0),
                }
                w.len(tensors.len());
                tensors.iter().for_each(|t| put_tensor(&mut w, t));
            }
            Message::Control { op, .. } => match op {
                Control::Hello { fingerprint, snapshots } => {
                    w.u8(0);
                    w.u64(*fingerprint);
                    w.u32(*snapshots);
                }
                Control::Encode { start, end } => {
                    w.u8(1);
                    w.u32(*start);
                    w.u32(*end);
                }
                Control::Ack { count } => {
                    w.u8(2);
                    w.u32(*count);
                }
                Control::Nack { reason } => {
                    w.u8(3);
                    w.str(reason);
                }
                Control::Reset { nonce } => {
                    w.u8(4);
                    w.u32(*nonce);
                }
                Control::Heartbeat => w.u8(5),
                Control::Stop => w.u8(6),
            },
            Message::UpstreamGrad { t, dh, .. } => {
                w.u32(*t);
                put_tensor(&mut w, dh);
            }
        }
        w.finish()
    }

    fn from_payload(tag: Tag, payload: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(payload);
        let version = r.u64()?;
        let msg = match tag {
            Tag::ParamBroadcast => {
                let n = r.u32()? as usize;
                Message::ParamBroadcast { version, params: Checkpoint::from_bytes(r.take(n)?)? }
            }
            Tag::SnapshotEmbeddings => Message::SnapshotEmbeddings { version, t: r.u32()?, h: get_tensor(&mut r)? },
            Tag::LossTask => {
                let target = r.u32()? as usize;
                let z = Arc::new(get_tensor(&mut r)?);
                let positives = get_pairs(&mut r)?;
                let negatives = get_pairs(&mut r)?;
                Message::LossTask { version, task: LossTask { target, z, positives, negatives } }
            }
            Tag::GradContribution => {
                let t = r.u32()?;
                let loss = match r.u8()? {
                    0 => None,
                    1 => Some(r.f32()?),
                    v => return Err(Error::Data(format!("bad loss flag {v}"))),
                };
                let n = r.u32()? as usize;
                if n > r.remaining() / 4 {
                    return Err(Error::Data(format!("{n} tensors exceed the payload")));
                }
                let tensors = (0..n).map(|_| get_tensor(&mut r)).collect::<Result<Vec<_>>>()?;
                Message::GradContribution { version, t, loss, tensors }
            }
            Tag::Control => {
                let op = match r.u8()? {
                    0 => Control::Hello { fingerprint: r.u64()?, snapshots: r.u32()? },
                    1 => Control::Encode { start: r.u32()?, end: r.u32()? },
                    2 => Control::Ack { count: r.u32()? },
                    3 => {
                        let n = r.u32()? as usize;
                        let bytes = r.take(n)?;
                        let reason = String::from_utf8(bytes.to_vec()).map_err(|e| Error::Data(e.to_string()))?;
                        Control::Nack { reason }
                    }
                    4 => Control::Reset { nonce: r.u32()? },
                    5 => Control::Heartbeat,
                    6 => Control::Stop,
                    v => return Err(Error::Data(format!("unknown control op {v}"))),
                };
                Message::Control { version, op }
            }
            Tag::UpstreamGrad => Message::UpstreamGrad { version, t: r.u32()?, dh: get_tensor(&mut r)? },
        };
        if !r.is_empty() {
            return Err(Error::Data(format!("{} trailing bytes in {tag:?}", r.remaining())));
        }
        Ok(msg)
    }

    /// The complete frame, length prefix and checksum included.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut body = Vec::with_capacity(payload.len() + 1);
        body.push(self.tag() as u8);
        body.extend_from_slice(&payload);
        let mut w = ByteWriter::new();
        w.len(body.len());
        w.bytes(&body);
        w.u32(crc32fast::hash(&body));
        w.finish()
    }

    /// Parses one complete frame. Every failure is a transport error.
    pub fn decode(frame: &[u8]) -> Result<Self> {
        let transport = |e: Error| Error::Transport(format!("bad frame: {e}"));
        let mut r = ByteReader::new(frame);
        let len = r.u32().map_err(transport)? as usize;
        if len == 0 || len > MAX_FRAME {
            return Err(Error::Transport(format!("frame length {len} out of range")));
        }
        let body = r.take(len).map_err(transport)?;
        let crc = r.u32().map_err(transport)?;
        if !r.is_empty() {
            return Err(Error::Transport(format!("{} bytes after frame", r.remaining())));
        }
        if crc32fast::hash(body) != crc {
            return Err(Error::Transport("frame checksum mismatch".into()));
        }
        let tag = Tag::from_u8(body[0])?;
        Self::from_payload(tag, &body[1..]).map_err(transport)
    }
}

/// A bidirectional, ordered frame pipe.
pub trait Link: Send {
    fn send(&mut self, frame: Vec<u8>) -> Result<()>;
    /// Next frame, or a transport error after `timeout`.
    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>>;
}

pub fn send_message(link: &mut dyn Link, msg: &Message) -> Result<()> {
    link.send(msg.encode())
}

pub fn recv_message(link: &mut dyn Link, timeout: Duration) -> Result<Message> {
    Message::decode(&link.recv(timeout)?)
}

/// In-process link over a pair of channels.
pub struct ChannelLink {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

impl ChannelLink {
    pub fn pair() -> (Self, Self) {
        let (a_tx, b_rx) = mpsc::channel();
        let (b_tx, a_rx) = mpsc::channel();
        (Self { tx: a_tx, rx: a_rx }, Self { tx: b_tx, rx: b_rx })
    }
}

impl Link for ChannelLink {
    fn send(&mut self, frame: Vec<u8>) -> Result<()> {
        self.tx.send(frame).map_err(|_| Error::Transport("peer disconnected".into()))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>> {
        self.rx.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => Error::Transport(format!("no message within {timeout:?}")),
            RecvTimeoutError::Disconnected => Error::Transport("peer disconnected".into()),
        })
    }
}

pub struct TcpLink {
    stream: TcpStream,
}

impl TcpLink {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }

    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self> {
        let transport = |e: std::io::Error| Error::Transport(format!("connect: {e}"));
        let addr = addr.to_socket_addrs().map_err(transport)?.next();
        let addr = addr.ok_or_else(|| Error::Transport("address resolved to nothing".into()))?;
        Self::new(TcpStream::connect_timeout(&addr, timeout).map_err(transport)?)
    }
}

impl Link for TcpLink {
    fn send(&mut self, frame: Vec<u8>) -> Result<()> {
        self.stream.write_all(&frame).map_err(|e| Error::Transport(format!("send: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>> {
        let io = |e: std::io::Error| match e.kind() {
            ErrorKind::WouldBlock | ErrorKind::TimedOut => Error::Transport(format!("no message within {timeout:?}")),
            _ => Error::Transport(format!("recv: {e}")),
        };
        self.stream.set_read_timeout(Some(timeout.max(Duration::from_millis(1)))).map_err(io)?;
        let mut len = [0u8; 4];
        self.stream.read_exact(&mut len).map_err(io)?;
        let n = u32::from_le_bytes(len) as usize;
        if n == 0 || n > MAX_FRAME {
            return Err(Error::Transport(format!("frame length {n} out of range")));
        }
        let mut frame = vec![0u8; 4 + n + 4];
        frame[..4].copy_from_slice(&len);
        self.stream.read_exact(&mut frame[4..]).map_err(io)?;
        Ok(frame)
    }
}

/// Deliberate failures for tests, counted in messages the worker sends.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultPlan {
    /// Exit without replying once this many messages have been sent.
    pub crash_after: Option<usize>,
    /// Silently skip the message with this send index.
    pub drop_at: Option<usize>,
    /// Flip one payload byte of the message with this send index.
    pub corrupt_at: Option<usize>,
}

struct FaultyLink<'a> {
    inner: &'a mut dyn Link,
    plan: FaultPlan,
    sent: usize,
}

impl FaultyLink<'_> {
    /// Returns false once the crash point is reached.
    fn send(&mut self, msg: &Message) -> Result<bool> {
        let i = self.sent;
        if self.plan.crash_after.is_some_and(|c| i >= c) {
            return Ok(false);
        }
        self.sent += 1;
        if self.plan.drop_at == Some(i) {
            log::warn!("fault injection: dropping message {i}");
            return Ok(true);
        }
        let mut frame = msg.encode();
        if self.plan.corrupt_at == Some(i) {
            log::warn!("fault injection: corrupting message {i}");
            frame[5] ^= 0xFF;
        }
        self.inner.send(frame)?;
        Ok(true)
    }
}

/// Hash of the snapshot structure and features a worker trains on.
pub fn data_fingerprint(data: &ForecastData) -> u64 {
    let mut h = crc32fast::Hasher::new();
    h.update(&(data.tg.len() as u64).to_le_bytes());
    h.update(&(data.node_count() as u64).to_le_bytes());
    for (t, f) in data.features.iter().enumerate() {
        let adj = data.adjacency(t);
        h.update(&(adj.nnz() as u64).to_le_bytes());
        f.data().iter().for_each(|v| h.update(&v.to_le_bytes()));
    }
    let lo = h.finalize();
    let mut h2 = crc32fast::Hasher::new_with_initial(lo);
    for p in &data.positives {
        p.iter().for_each(|&(a, b)| {
            h2.update(&a.to_le_bytes());
            h2.update(&b.to_le_bytes());
        });
    }
    (u64::from(lo) << 32) | u64::from(h2.finalize())
}

fn encoder_from_checkpoint(ck: &Checkpoint) -> Result<SageEncoder<f32>> {
    let get = |name: &str| {
        ck.get(name).cloned().ok_or_else(|| Error::Transport(format!("parameter broadcast lacks {name}")))
    };
    let linear = |prefix: &str| -> Result<Linear<f32>> {
        let (w, b) = (format!("{prefix}.w"), format!("{prefix}.b"));
        Ok(Linear { w: Parameter::new(&w, get(&w)?), b: Parameter::new(&b, get(&b)?) })
    };
    let encoder = SageEncoder { layer1: linear("sage.layer1")?, layer2: linear("sage.layer2")? };
    let names: Vec<String> = encoder.params().iter().map(|p| p.name.clone()).collect();
    if names.len() != ck.tensors.len() {
        return Err(Error::Transport(format!("broadcast carries {} tensors, encoder has {}", ck.tensors.len(), names.len())));
    }
    Ok(encoder)
}

struct WorkerState {
    version: Option<u64>,
    encoder: Option<SageEncoder<f32>>,
    caches: BTreeMap<usize, SageCache<f32>>,
}

/// Serves one coordinator until `Stop` or disconnect. Returns early, without
/// error, when the fault plan's crash point is reached.
pub fn run_worker(link: &mut dyn Link, data: &ForecastData, faults: &FaultPlan, idle: Duration) -> Result<()> {
    let mut out = FaultyLink { inner: link, plan: faults.clone(), sent: 0 };
    let mut st = WorkerState { version: None, encoder: None, caches: BTreeMap::new() };
    let fingerprint = data_fingerprint(data);
    loop {
        let frame = match out.inner.recv(idle) {
            Ok(f) => f,
            Err(e) => {
                log::info!("worker exiting: {e}");
                return Ok(());
            }
        };
        let msg = match Message::decode(&frame) {
            Ok(m) => m,
            Err(e) => {
                let nack = Message::Control { version: 0, op: Control::Nack { reason: e.to_string() } };
                if !out.send(&nack)? {
                    return Ok(());
                }
                continue;
            }
        };
        let version = msg.version();
        let nack = |reason: String| Message::Control { version, op: Control::Nack { reason } };
        let stale = |st: &WorkerState| st.version != Some(version);
        let replies: Vec<Message> = match msg {
            Message::Control { op: Control::Stop, .. } => return Ok(()),
            Message::Control { op: Control::Heartbeat, .. } => vec![Message::Control { version, op: Control::Heartbeat }],
            Message::Control { op: Control::Hello { fingerprint: f, snapshots }, .. } => {
                if f == fingerprint && snapshots as usize == data.tg.len() {
                    vec![Message::Control { version, op: Control::Ack { count: snapshots } }]
                } else {
                    vec![nack(format!("dataset mismatch: fingerprint {f:016x} vs local {fingerprint:016x}"))]
                }
            }
            Message::Control { op: Control::Reset { nonce }, .. } => {
                st.caches.clear();
                vec![Message::Control { version, op: Control::Ack { count: nonce } }]
            }
            Message::ParamBroadcast { params, .. } => match encoder_from_checkpoint(&params) {
                Ok(enc) => {
                    st.encoder = Some(enc);
                    st.version = Some(version);
                    st.caches.clear();
                    Vec::new()
                }
                Err(e) => vec![nack(e.to_string())],
            },
            Message::Control { op: Control::Encode { start, end }, .. } => match (&st.encoder, stale(&st)) {
                (Some(enc), false) if end as usize <= data.tg.len() => {
                    let mut replies = Vec::new();
                    for t in start as usize..end as usize {
                        let cache = encode_snapshot(enc, data, t)?;
                        replies.push(Message::SnapshotEmbeddings { version, t: t as u32, h: cache.h2.clone() });
                        st.caches.insert(t, cache);
                    }
                    replies.push(Message::Control { version, op: Control::Ack { count: end.saturating_sub(start) } });
                    replies
                }
                _ => vec![nack(format!("cannot encode {start}..{end} at version {version}"))],
            },
            Message::LossTask { task, .. } => {
                if stale(&st) {
                    vec![nack(format!("stale loss task at version {version}"))]
                } else {
                    let r = run_loss_task(&task)?;
                    vec![Message::GradContribution { version, t: r.target as u32, loss: Some(r.loss), tensors: vec![r.dz] }]
                }
            }
            Message::UpstreamGrad { t, dh, .. } => match (&st.encoder, st.caches.get(&(t as usize)), stale(&st)) {
                (Some(enc), Some(cache), false) => {
                    let grads = snapshot_encoder_grads(enc, data, t as usize, cache, &dh)?;
                    vec![Message::GradContribution { version, t, loss: None, tensors: grads }]
                }
                _ => vec![nack(format!("no forward state for snapshot {t} at version {version}"))],
            },
            other => vec![nack(format!("unexpected {:?} on worker", other.tag()))],
        };
        for r in &replies {
            if !out.send(r)? {
                log::warn!("fault injection: worker crashing");
                return Ok(());
            }
        }
    }
}

/// Accepts coordinators on `listener` one at a time.
pub fn serve(listener: TcpListener, data: &ForecastData, idle: Duration) -> Result<()> {
    for stream in listener.incoming() {
        let mut link = TcpLink::new(stream?)?;
        run_worker(&mut link, data, &FaultPlan::default(), idle)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistConfig {
    /// Worker endpoints (`host:port`); empty means in-process workers.
    pub endpoints: Vec<String>,
    /// Maximum wait for any single reply.
    pub timeout_ms: u64,
}

impl Default for DistConfig {
    fn default() -> Self {
        Self { endpoints: Vec::new(), timeout_ms: 30_000 }
    }
}

/// A [`SnapshotExecutor`] that dispatches every phase to sharded workers.
pub struct DistExecutor {
    links: Vec<Box<dyn Link>>,
    shards: Vec<Range<usize>>,
    timeout: Duration,
    needs_reset: bool,
    nonce: u32,
}

impl DistExecutor {
    /// Checks every worker against the local dataset.
    pub fn new(links: Vec<Box<dyn Link>>, data: &ForecastData, timeout: Duration) -> Result<Self> {
        let shards = shard_snapshots(data.tg.len(), links.len())?;
        let mut exec = Self { links, shards, timeout, needs_reset: false, nonce: 0 };
        let hello = Control::Hello { fingerprint: data_fingerprint(data), snapshots: data.tg.len() as u32 };
        for w in 0..exec.links.len() {
            exec.send(w, &Message::Control { version: 0, op: hello.clone() })?;
            match exec.recv(w)? {
                Message::Control { op: Control::Ack { .. }, .. } => {}
                other => return Err(unexpected(w, &other)),
            }
        }
        Ok(exec)
    }

    pub fn shards(&self) -> &[Range<usize>] {
        &self.shards
    }

    /// Number of resynchronizations after failed phases.
    pub fn recoveries(&self) -> u32 {
        self.nonce
    }

    fn owner(&self, t: usize) -> Result<usize> {
        self.shards
            .iter()
            .position(|r| r.contains(&t))
            .ok_or_else(|| Error::Transport(format!("snapshot {t} is not assigned to any worker")))
    }

    fn send(&mut self, w: usize, msg: &Message) -> Result<()> {
        let r = send_message(self.links[w].as_mut(), msg);
        self.note(r)
    }

    fn recv(&mut self, w: usize) -> Result<Message> {
        let r = recv_message(self.links[w].as_mut(), self.timeout);
        self.note(r)
    }

    fn note<T>(&mut self, r: Result<T>) -> Result<T> {
        if r.is_err() {
            self.needs_reset = true;
        }
        r
    }

    fn fail<T>(&mut self, e: Error) -> Result<T> {
        self.needs_reset = true;
        Err(e)
    }

    /// After a failure, discards everything each worker sent before it
    /// acknowledges a fresh reset.
    fn resync(&mut self) -> Result<()> {
        if !self.needs_reset {
            return Ok(());
        }
        self.nonce += 1;
        let nonce = self.nonce;
        for w in 0..self.links.len() {
            self.send(w, &Message::Control { version: 0, op: Control::Reset { nonce } })?;
            loop {
                if let Message::Control { op: Control::Ack { count }, .. } = self.recv(w)? {
                    if count == nonce {
                        break;
                    }
                }
            }
        }
        self.needs_reset = false;
        Ok(())
    }

    fn expect_version(&mut self, w: usize, msg: &Message, version: u64) -> Result<()> {
        if let Message::Control { op: Control::Nack { reason }, .. } = msg {
            return self.fail(Error::Transport(format!("worker {w} rejected request: {reason}")));
        }
        if msg.version() != version {
            return self.fail(Error::Transport(format!(
                "worker {w} replied with stale version {} (current {version})",
                msg.version()
            )));
        }
        Ok(())
    }

    /// Sends `Stop` to every worker, ignoring failures.
    pub fn shutdown(&mut self) {
        for link in &mut self.links {
            let _ = send_message(link.as_mut(), &Message::Control { version: 0, op: Control::Stop });
        }
    }
}

fn unexpected(w: usize, msg: &Message) -> Error {
    Error::Transport(format!("worker {w} sent unexpected {:?}", msg.tag()))
}

impl Drop for DistExecutor {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl SnapshotExecutor for DistExecutor {
    fn encode(&mut self, version: u64, encoder: &SageEncoder<f32>, ts: Range<usize>) -> Result<Vec<Tensor<f32>>> {
        self.resync()?;
        let params = Checkpoint::from_module(encoder);
        let mut h: Vec<Option<Tensor<f32>>> = vec![None; ts.len()];
        for w in 0..self.links.len() {
            let shard = &self.shards[w];
            let (start, end) = (shard.start.max(ts.start), shard.end.min(ts.end).max(shard.start.max(ts.start)));
            self.send(w, &Message::ParamBroadcast { version, params: params.clone() })?;
            self.send(w, &Message::Control { version, op: Control::Encode { start: start as u32, end: end as u32 } })?;
        }
        for w in 0..self.links.len() {
            loop {
                let msg = self.recv(w)?;
                self.expect_version(w, &msg, version)?;
                match msg {
                    Message::SnapshotEmbeddings { t, h: emb, .. } if ts.contains(&(t as usize)) => {
                        h[t as usize - ts.start] = Some(emb);
                    }
                    Message::Control { op: Control::Ack { .. }, .. } => break,
                    other => return self.fail(unexpected(w, &other)),
                }
            }
        }
        match h.into_iter().collect::<Option<Vec<_>>>() {
            Some(h) => Ok(h),
            None => self.fail(Error::Transport("a snapshot embedding never arrived".into())),
        }
    }

    fn losses(&mut self, version: u64, tasks: Vec<LossTask>) -> Result<Vec<LossResult>> {
        let mut pending = vec![0usize; self.links.len()];
        for task in tasks {
            let w = self.owner(task.target)?;
            pending[w] += 1;
            self.send(w, &Message::LossTask { version, task })?;
        }
        let mut out = Vec::new();
        for (w, &n) in pending.iter().enumerate() {
            for _ in 0..n {
                let msg = self.recv(w)?;
                self.expect_version(w, &msg, version)?;
                match msg {
                    Message::GradContribution { t, loss: Some(loss), mut tensors, .. } if tensors.len() == 1 => {
                        let dz = tensors.pop().expect("length checked");
                        out.push(LossResult { target: t as usize, loss, dz });
                    }
                    other => return self.fail(unexpected(w, &other)),
                }
            }
        }
        out.sort_by_key(|r| r.target);
        Ok(out)
    }

    fn encoder_grads(&mut self, version: u64, upstream: Vec<(usize, Tensor<f32>)>) -> Result<Vec<(usize, Vec<Tensor<f32>>)>> {
        let mut pending = vec![0usize; self.links.len()];
        for (t, dh) in upstream {
            let w = self.owner(t)?;
            pending[w] += 1;
            self.send(w, &Message::UpstreamGrad { version, t: t as u32, dh })?;
        }
        let mut out = Vec::new();
        for (w, &n) in pending.iter().enumerate() {
            for _ in 0..n {
                let msg = self.recv(w)?;
                self.expect_version(w, &msg, version)?;
                match msg {
                    Message::GradContribution { t, loss: None, tensors, .. } => out.push((t as usize, tensors)),
                    other => return self.fail(unexpected(w, &other)),
                }
            }
        }
        out.sort_by_key(|(t, _)| *t);
        Ok(out)
    }
}

/// `k` worker threads over in-process links, each running [`run_worker`]
/// with its own fault plan.
pub struct LocalCluster {
    pub executor: DistExecutor,
    handles: Vec<JoinHandle<Result<()>>>,
}

impl LocalCluster {
    pub fn spawn(data: Arc<ForecastData>, k: usize, timeout: Duration, faults: &[FaultPlan]) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        let mut links: Vec<Box<dyn Link>> = Vec::with_capacity(k);
        let mut handles = Vec::with_capacity(k);
        for w in 0..k {
            let (coord, mut worker) = ChannelLink::pair();
            let data = data.clone();
            let plan = faults.get(w).cloned().unwrap_or_default();
            let idle = timeout.saturating_mul(10).max(Duration::from_secs(60));
            let handle = std::thread::Builder::new()
                .name(format!("worker-{w}"))
                .spawn(move || run_worker(&mut worker, &data, &plan, idle))?;
            links.push(Box::new(coord));
            handles.push(handle);
        }
        let executor = DistExecutor::new(links, &data, timeout)?;
        Ok(Self { executor, handles })
    }

    /// Stops the workers and surfaces any worker-side error.
    pub fn join(mut self) -> Result<()> {
        self.executor.shutdown();
        for h in std::mem::take(&mut self.handles) {
            h.join().map_err(|_| Error::Transport("worker thread panicked".into()))??;
        }
        Ok(())
    }
}

/// Connects to remote workers started with `coordnet worker`.
pub fn connect_workers(cfg: &DistConfig, data: &ForecastData) -> Result<DistExecutor> {
    let timeout = Duration::from_millis(cfg.timeout_ms);
    let links = cfg
        .endpoints
        .iter()
        .map(|e| TcpLink::connect(e.as_str(), timeout).map(|l| Box::new(l) as Box<dyn Link>))
        .collect::<Result<Vec<_>>>()?;
    DistExecutor::new(links, data, timeout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shards_are_contiguous_and_balanced() {
        assert_eq!(shard_snapshots(10, 2).unwrap(), vec![0..5, 5..10]);
        assert_eq!(shard_snapshots(7, 3).unwrap(), vec![0..3, 3..5, 5..7]);
        assert_eq!(shard_snapshots(2, 4).unwrap(), vec![0..1, 1..2, 2..2, 2..2]);
        assert!(shard_snapshots(3, 0).is_err());
    }

    #[test]
    fn frame_round_trip_and_checksum() {
        let msg = Message::UpstreamGrad { version: 9, t: 3, dh: Tensor::matrix(2, 2, vec![1.0, -2.0, 0.5, 4.0]).unwrap() };
        let frame = msg.encode();
        assert_eq!(Message::decode(&frame).unwrap(), msg);
        let mut bad = frame.clone();
        bad[7] ^= 1;
        assert!(matches!(Message::decode(&bad), Err(Error::Transport(_))));
        assert!(matches!(Message::decode(&frame[..frame.len() - 1]), Err(Error::Transport(_))));
    }
}
