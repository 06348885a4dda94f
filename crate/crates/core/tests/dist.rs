mod common;

use std::net::TcpListener;
use std::sync::Arc;
use std::time::Duration;

use coordnet::dist::{
    connect_workers, recv_message, send_message, serve, ChannelLink, Control, DistConfig, FaultPlan, LocalCluster,
    Message,
};
use coordnet::forecast::{train_forecaster, ForecastConfig, ForecastData, ForecastOutcome, LossTask, Trainer};
use coordnet::nn::{Checkpoint, Module, Tensor};
use coordnet::Error;

const EPOCHS: usize = 3;

fn data() -> Arc<ForecastData> {
    common::forecast_data(&common::small_campaign(11), 4)
}

fn cfg() -> ForecastConfig {
    ForecastConfig { max_epochs: EPOCHS, ..Default::default() }
}

fn bits(out: &ForecastOutcome) -> Vec<u32> {
    out.model.params().iter().flat_map(|p| p.value.data().iter().map(|v| v.to_bits())).collect()
}

fn distributed(data: &Arc<ForecastData>, k: usize, faults: &[FaultPlan]) -> coordnet::Result<ForecastOutcome> {
    let mut cluster = LocalCluster::spawn(data.clone(), k, Duration::from_secs(5), faults)?;
    let out = coordnet::forecast::train_with_executor(&mut cluster.executor, data, &cfg(), 7);
    cluster.join()?;
    out
}

#[test]
fn worker_count_does_not_change_parameters() {
    let data = data();
    assert!(data.tg.len() >= 8, "{} snapshots", data.tg.len());
    let local = train_forecaster(data.clone(), &cfg(), 7).unwrap();
    for k in [1, 2, 4] {
        let out = distributed(&data, k, &[]).unwrap();
        assert_eq!(bits(&out), bits(&local), "k = {k}");
        assert_eq!(out.log, local.log, "k = {k}");
    }
}

#[test]
fn idle_workers_only_acknowledge() {
    let data = data();
    let k = data.tg.len() + 2;
    let local = train_forecaster(data.clone(), &cfg(), 7).unwrap();
    let mut cluster = LocalCluster::spawn(data.clone(), k, Duration::from_secs(5), &[]).unwrap();
    assert!(cluster.executor.shards()[k - 1].is_empty());
    let out = coordnet::forecast::train_with_executor(&mut cluster.executor, &data, &cfg(), 7).unwrap();
    cluster.join().unwrap();
    assert_eq!(bits(&out), bits(&local));
}

/// Messages worker `w` of `k` sends during one training epoch.
fn messages_per_epoch(data: &ForecastData, k: usize, w: usize) -> usize {
    let shard = coordnet::dist::shard_snapshots(data.tg.len(), k).unwrap()[w].clone();
    let forward_end = data.split.n_train + data.split.n_val - 1;
    let encoded = shard.clone().filter(|&t| t < forward_end).count();
    let losses = data.split.train_targets().filter(|t| shard.contains(t) && !data.positives[*t].is_empty()).count();
    2 * encoded + 1 + losses
}

#[test]
fn dropped_or_corrupted_message_is_retried() {
    let data = data();
    let clean = distributed(&data, 2, &[]).unwrap();
    let per = messages_per_epoch(&data, 2, 1);
    for plan in [
        FaultPlan { drop_at: Some(1 + per + 2), ..Default::default() },
        FaultPlan { corrupt_at: Some(1 + per + 2), ..Default::default() },
    ] {
        let mut cluster = LocalCluster::spawn(data.clone(), 2, Duration::from_millis(500), &[FaultPlan::default(), plan.clone()])
            .unwrap();
        let out = coordnet::forecast::train_with_executor(&mut cluster.executor, &data, &cfg(), 7).unwrap();
        assert_eq!(cluster.executor.recoveries(), 1, "{plan:?}");
        cluster.join().unwrap();
        assert_eq!(bits(&out), bits(&clean), "{plan:?}");
    }
}

#[test]
fn crash_mid_epoch_commits_nothing() {
    let data = data();
    let per = messages_per_epoch(&data, 2, 1);
    let encoded_and_ack = per - data.split.train_targets().filter(|t| !data.positives[*t].is_empty()).count().min(per);
    let plan = FaultPlan { crash_after: Some(1 + per + encoded_and_ack / 2 + 1), ..Default::default() };
    let mut cluster = LocalCluster::spawn(data.clone(), 2, Duration::from_millis(500), &[FaultPlan::default(), plan]).unwrap();
    let mut trainer = Trainer::new(&data, &cfg(), 7).unwrap();
    trainer.epoch(&data, &mut cluster.executor).unwrap();
    let committed = trainer.model.clone();
    let err = trainer.epoch(&data, &mut cluster.executor).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert_eq!(trainer.version, 1);
    assert_eq!(trainer.log.len(), 1);
    assert_eq!(trainer.model, committed);
    let _ = cluster.join();
}

#[test]
fn worker_rejects_stale_versions() {
    let data = data();
    let (mut coord, mut worker) = ChannelLink::pair();
    let d = data.clone();
    let handle = std::thread::spawn(move || {
        coordnet::dist::run_worker(&mut worker, &d, &FaultPlan::default(), Duration::from_secs(30))
    });
    let model = Trainer::new(&data, &cfg(), 7).unwrap().model;
    let timeout = Duration::from_secs(5);
    send_message(&mut coord, &Message::ParamBroadcast { version: 4, params: Checkpoint::from_module(&model.encoder) }).unwrap();
    let task = LossTask { target: 1, z: Arc::new(Tensor::zeros(&[data.node_count(), 32])), positives: vec![(0, 1)], negatives: vec![(0, 2)] };
    send_message(&mut coord, &Message::LossTask { version: 3, task: task.clone() }).unwrap();
    match recv_message(&mut coord, timeout).unwrap() {
        Message::Control { version: 3, op: Control::Nack { .. } } => {}
        other => panic!("expected a rejection, got {other:?}"),
    }
    send_message(&mut coord, &Message::LossTask { version: 4, task }).unwrap();
    match recv_message(&mut coord, timeout).unwrap() {
        Message::GradContribution { version: 4, t: 1, loss: Some(l), .. } => assert!(l.is_finite()),
        other => panic!("expected a loss, got {other:?}"),
    }
    send_message(&mut coord, &Message::Control { version: 0, op: Control::Stop }).unwrap();
    handle.join().unwrap().unwrap();
}

#[test]
fn tcp_workers_match_local() {
    let data = data();
    let local = train_forecaster(data.clone(), &cfg(), 7).unwrap();
    let mut endpoints = Vec::new();
    for _ in 0..2 {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        endpoints.push(listener.local_addr().unwrap().to_string());
        let d = data.clone();
        std::thread::spawn(move || serve(listener, &d, Duration::from_secs(30)));
    }
    let dist = DistConfig { endpoints, timeout_ms: 10_000 };
    let mut exec = connect_workers(&dist, &data).unwrap();
    let out = coordnet::forecast::train_with_executor(&mut exec, &data, &cfg(), 7).unwrap();
    assert_eq!(bits(&out), bits(&local));
}

#[test]
fn throughput_scales_with_cores() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 4 {
        eprintln!("skipping throughput check: {cores} core(s) available");
        return;
    }
    let data = data();
    let time = |k: usize| {
        let start = std::time::Instant::now();
        distributed(&data, k, &[]).unwrap();
        start.elapsed().as_secs_f64()
    };
    let (t1, t4) = (time(1), time(4));
    eprintln!("1 worker {t1:.2}s, 4 workers {t4:.2}s, speedup {:.2}", t1 / t4);
    assert!(t1 / t4 >= 2.5);
}
