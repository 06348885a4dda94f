use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use coordnet::baselines::{pagerank, tabular_features, ForestModel};
use coordnet::canonical::to_canonical_json;
use coordnet::dist::{connect_workers, serve, LocalCluster};
use coordnet::eval::pipeline::{
    labeled_nodes, pagerank_cv, run_ablation, run_robustness, sage_cv, standardize_all, tabular_cv, topology_input,
    Downstream,
};
use coordnet::eval::{classification_report, EvalReport, RunMeta};
use coordnet::features::{
    build_embedding_table, detection_features, fuse_embeddings, EmbeddingProvider, EmbeddingTable, FeatureMatrix,
    HashingProvider, HttpProvider, LABEL_AGGREGATE_WIDTH,
};
use coordnet::forecast::{
    evaluate_forecaster, train_forecaster, train_with_executor, ForecastData, ForecastModel, ForecastOutcome, Variant,
};
use coordnet::graph::{
    build_labeled, partition_snapshots, resolve_labels, select_delta, Graph, NodeIndex, SECONDS_PER_DAY,
};
use coordnet::ingest::{extract_edges, parse_labels, parse_records, EdgeEvent, ExtractRules, InteractionRecord, UserLabel};
use coordnet::nn::{Checkpoint, Tensor};
use coordnet::sage::{extract_embeddings, gather_rows, sage_forward, train_detector, SageClassifier};
use coordnet::seed::{derive_seed, stream_rng};
use coordnet::synth::{generate_campaign, CampaignConfig};
use coordnet::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{BaselineMethod, ProviderKind, RunConfig, Task};
use crate::manifest::{sha256_file, Manifest};

const KIND: [u8; 4] = *b"KIND";
const CONF: [u8; 4] = *b"CONF";
const TREE: [u8; 4] = *b"TREE";

/// Output directory writer that records what it produced.
pub struct Outputs<'a> {
    dir: &'a Path,
    pub written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut f = self.file(name)?;
        f.write_all(bytes)?;
        f.flush()?;
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = to_canonical_json(value)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }
}

struct Inputs {
    records: Vec<InteractionRecord>,
    labels: BTreeMap<String, UserLabel>,
    dataset_id: String,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let path = cfg.records.as_deref().ok_or_else(|| Error::Config("`records` is required".into()))?;
    let parsed = parse_records(BufReader::new(File::open(path)?), cfg.platform)?;
    for e in parsed.errors.iter().take(20) {
        log::warn!("{}: {e}", path.display());
    }
    if !parsed.errors.is_empty() {
        log::warn!("{} malformed lines skipped", parsed.errors.len());
    }
    if parsed.records.is_empty() {
        return Err(Error::Data(format!("{} holds no valid {:?} records", path.display(), cfg.platform)));
    }
    let labels = match &cfg.labels {
        Some(p) => parse_labels(File::open(p)?)?,
        None => BTreeMap::new(),
    };
    Ok(Inputs { records: parsed.records, labels, dataset_id: sha256_file(path)? })
}

fn rules(cfg: &RunConfig, task: Task) -> ExtractRules {
    cfg.rules.unwrap_or(ExtractRules { include_mentions: task.temporal(), same_subreddit_only: false })
}

fn edges(cfg: &RunConfig, task: Task, inputs: &Inputs) -> Result<Vec<EdgeEvent>> {
    let ex = extract_edges(&inputs.records, &rules(cfg, task));
    if ex.skipped.unknown_parent + ex.skipped.self_loops > 0 {
        log::info!("skipped {} edges to unknown parents, {} self-loops", ex.skipped.unknown_parent, ex.skipped.self_loops);
    }
    if ex.edges.is_empty() {
        return Err(Error::Data("records produced no interaction edges".into()));
    }
    Ok(ex.edges)
}

fn meta(cfg: &RunConfig, manifest: &Manifest, inputs: &Inputs) -> RunMeta {
    RunMeta {
        seed: cfg.seed,
        config_hash: manifest.config_hash.clone(),
        dataset_id: inputs.dataset_id.clone(),
        timestamp: inputs.records.iter().map(|r| r.created_at).max().unwrap_or(0),
    }
}

fn trolls(labels: &BTreeMap<String, UserLabel>) -> BTreeSet<String> {
    labels.iter().filter(|(_, l)| **l == UserLabel::Troll).map(|(u, _)| u.clone()).collect()
}

/// Detection input: log-scaled, z-scored topology features, fused with the
/// configured embedding table when one is given.
fn detection_input(cfg: &RunConfig, graph: &Graph) -> Result<FeatureMatrix> {
    let topo = topology_input(graph);
    let Some(path) = &cfg.embeddings else {
        return Ok(topo);
    };
    let table = EmbeddingTable::load(path)?;
    let (mut fused, missing) = fuse_embeddings(&topo, graph, &table)?;
    if missing > 0 {
        log::warn!("{missing} nodes have no embedding; using zeros");
    }
    standardize_all(&mut fused);
    Ok(fused)
}

#[derive(Serialize, Deserialize)]
struct ForecastMeta {
    variant: Variant,
    hidden: usize,
    embed_dim: usize,
    t0: i64,
    delta: i64,
}

fn forecast_data(cfg: &RunConfig, inputs: &Inputs) -> Result<(Arc<ForecastData>, serde_json::Value)> {
    let events = edges(cfg, Task::TrainForecast, inputs)?;
    let timestamps: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
    let first = timestamps.iter().copied().min().expect("edges are non-empty");
    let (delta, t0, selection) = match cfg.delta.days {
        Some(days) => ((days * SECONDS_PER_DAY as f64).round() as i64, first - first.rem_euclid(SECONDS_PER_DAY), None),
        None => {
            let step = (cfg.delta.step_days * SECONDS_PER_DAY as f64).round() as i64;
            let sel = select_delta(&timestamps, cfg.delta.min_edges, step)?;
            (sel.delta, first, Some(sel))
        }
    };
    if delta <= 0 {
        return Err(Error::Config("snapshot width rounds to zero seconds".into()));
    }
    let index = Arc::new(NodeIndex::new(
        events.iter().flat_map(|e| [e.source.clone(), e.target.clone()]).chain(inputs.labels.keys().cloned()),
    ));
    let (labels, _) = resolve_labels(&index, &inputs.labels);
    let tg = partition_snapshots(&events, index, Arc::new(labels), delta, t0)?;
    let info = json!({ "t0": t0, "delta": delta, "snapshots": tg.len(), "selection": selection });
    Ok((Arc::new(ForecastData::new(tg)?), info))
}

fn forecast_checkpoint(out: &ForecastOutcome, m: &ForecastMeta) -> Result<Checkpoint> {
    let mut ck = Checkpoint::from_module(&out.model);
    ck.sections.push((KIND, b"forecast".to_vec()));
    ck.sections.push((CONF, to_canonical_json(m)?.into_bytes()));
    Ok(ck)
}

#[derive(Serialize, Deserialize)]
struct DetectMeta {
    input_width: usize,
    hidden: usize,
    downstream: Downstream,
    fused: bool,
}

fn section<'a>(ck: &'a Checkpoint, tag: &[u8; 4]) -> Result<&'a [u8]> {
    ck.section(tag).ok_or_else(|| Error::Data(format!("checkpoint lacks the {} section", String::from_utf8_lossy(tag))))
}

fn rows_of(h: &Tensor<f32>, nodes: &[usize]) -> Vec<Vec<f64>> {
    nodes.iter().map(|&v| h.row(v).iter().map(|&x| f64::from(x)).collect()).collect()
}

/// Runs `task` and returns the names of the files it wrote.
pub fn dispatch(task: Task, cfg: &RunConfig, manifest: &Manifest) -> Result<Vec<String>> {
    let mut out = Outputs::new(&cfg.out)?;
    match task {
        Task::Synth => synth(cfg, &mut out)?,
        Task::Worker => worker(cfg)?,
        _ => {
            let inputs = load_inputs(cfg)?;
            let meta = meta(cfg, manifest, &inputs);
            match task {
                Task::Ingest => ingest(cfg, &inputs, &meta, &mut out)?,
                Task::BuildGraph => build_graph(cfg, &inputs, &meta, &mut out)?,
                Task::SelectDelta => delta(cfg, &inputs, &meta, &mut out)?,
                Task::Featurize => featurize(cfg, &inputs, &mut out)?,
                Task::Embed => embed(cfg, &inputs, &mut out)?,
                Task::TrainDetect => train_detect(cfg, &inputs, meta, &mut out)?,
                Task::TrainForecast => train_forecast(cfg, &inputs, &meta, &mut out)?,
                Task::Evaluate => evaluate(cfg, &inputs, meta, &mut out)?,
                Task::Baseline => baseline(cfg, &inputs, meta, &mut out)?,
                Task::Ablate => ablate(cfg, &inputs, &meta, &mut out)?,
                Task::Robustness => robustness(cfg, &inputs, &meta, &mut out)?,
                Task::Synth | Task::Worker => unreachable!("handled above"),
            }
        }
    }
    Ok(out.written)
}

fn synth(cfg: &RunConfig, out: &mut Outputs<'_>) -> Result<()> {
    let mut campaign_cfg = match &cfg.synth.campaign {
        Some(c) => c.clone(),
        None => CampaignConfig::preset(&cfg.synth.preset)?,
    };
    campaign_cfg.seed = cfg.seed;
    let campaign = generate_campaign(&campaign_cfg)?;
    let mut f = out.file("records.jsonl")?;
    campaign.write_records(&mut f)?;
    f.flush()?;
    let mut f = out.file("labels.csv")?;
    campaign.write_labels(&mut f)?;
    f.flush()?;
    out.json(
        "report.json",
        &json!({
            "platform": campaign_cfg.platform,
            "records": campaign.records.len(),
            "users": campaign.labels.len(),
            "trolls": campaign.trolls().count(),
            "clusters": campaign.clusters,
            "audiences": campaign.audiences,
            "campaign": campaign_cfg,
        }),
    )
}

fn ingest(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let path = cfg.records.as_deref().expect("validated");
    let parsed = parse_records(BufReader::new(File::open(path)?), cfg.platform)?;
    let mut f = out.file("records.jsonl")?;
    for r in &inputs.records {
        writeln!(f, "{}", r.to_raw_json()?)?;
    }
    f.flush()?;
    let errors: Vec<_> = parsed.errors.iter().map(|e| json!({ "line": e.line, "message": e.message })).collect();
    let ex = extract_edges(&inputs.records, &rules(cfg, Task::Ingest));
    out.json(
        "report.json",
        &json!({
            "meta": meta,
            "records": inputs.records.len(),
            "malformed": errors,
            "authors": inputs.records.iter().map(|r| r.author.as_str()).collect::<BTreeSet<_>>().len(),
            "edges": ex.edges.len(),
            "skipped": ex.skipped,
        }),
    )
}

fn build_graph(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::BuildGraph, inputs)?, &inputs.labels)?;
    out.bytes("graph.tgf", &graph.to_tgf())?;
    let (nodes, labels) = labeled_nodes(&graph);
    out.json(
        "report.json",
        &json!({
            "meta": meta,
            "nodes": graph.node_count(),
            "edges": graph.edge_count(),
            "distinct_pairs": graph.out_adj().nnz(),
            "labeled": nodes.len(),
            "trolls": labels.iter().filter(|&&l| l == 1).count(),
        }),
    )
}

fn delta(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let events = edges(cfg, Task::SelectDelta, inputs)?;
    let timestamps: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
    let step = (cfg.delta.step_days * SECONDS_PER_DAY as f64).round() as i64;
    let sel = select_delta(&timestamps, cfg.delta.min_edges, step)?;
    println!("{}", to_canonical_json(&sel)?);
    out.json("report.json", &json!({ "meta": meta, "selection": sel, "min_edges": cfg.delta.min_edges, "step": step }))
}

fn featurize(cfg: &RunConfig, inputs: &Inputs, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::Featurize, inputs)?, &inputs.labels)?;
    let m = detection_features(&graph);
    let mut w = out.file("features.csv")?;
    let header: Vec<String> =
        std::iter::once("user_id".to_string()).chain(m.groups().iter().flat_map(|g| g.columns.clone())).collect();
    writeln!(w, "{}", header.join(","))?;
    for v in 0..graph.node_count() {
        let row: Vec<String> = m.row(v).iter().map(|&x| coordnet::canonical::fmt_g17(x)).collect();
        writeln!(w, "{},{}", graph.index().user(v as u32), row.join(","))?;
    }
    w.flush()?;
    let mut w = out.file("tabular.csv")?;
    tabular_features(&inputs.records, &trolls(&inputs.labels), cfg.platform)?.write_csv(&mut w)?;
    Ok(())
}

fn embed(cfg: &RunConfig, inputs: &Inputs, out: &mut Outputs<'_>) -> Result<()> {
    let e = &cfg.embedding;
    let provider: Box<dyn EmbeddingProvider> = match e.provider {
        ProviderKind::Hashing => Box::new(HashingProvider { dim: e.dim }),
        ProviderKind::Http => Box::new(HttpProvider::new(
            "http",
            e.endpoint.as_deref().expect("validated"),
            e.api_key_env.as_deref(),
            Duration::from_millis(e.timeout_ms),
        )?),
    };
    let (table, failed) = build_embedding_table(&inputs.records, provider.as_ref(), &e.posts)?;
    if failed > 0 {
        log::warn!("{failed} users could not be embedded");
    }
    let mut f = out.file("embeddings.jsonl")?;
    table.write_jsonl(&mut f)?;
    f.flush()?;
    out.json("report.json", &json!({ "provider": provider.name(), "dim": table.dim(), "users": table.len(), "failed": failed }))
}

fn train_detect(cfg: &RunConfig, inputs: &Inputs, meta: RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::TrainDetect, inputs)?, &inputs.labels)?;
    let x = detection_input(cfg, &graph)?;
    let det = &cfg.detection;
    let cv = sage_cv(&graph, &x, det, cfg.seed)?;

    // final model on every labeled node
    let (nodes, labels) = labeled_nodes(&graph);
    let mut targets = vec![0usize; graph.node_count()];
    nodes.iter().zip(&labels).for_each(|(&v, &l)| targets[v] = l);
    let xt = Tensor::matrix(x.rows(), x.width(), x.to_f32())?;
    let (model, log) = train_detector(&graph, &xt, &targets, &nodes, &det.sage, derive_seed(cfg.seed, "detect.final"))?;
    let mut ck = Checkpoint::from_module(&model);
    ck.sections.push((KIND, b"detect".to_vec()));
    let dm = DetectMeta { input_width: x.width(), hidden: det.sage.hidden, downstream: det.downstream, fused: cfg.embeddings.is_some() };
    ck.sections.push((CONF, to_canonical_json(&dm)?.into_bytes()));
    if det.downstream == Downstream::Forest {
        let h = extract_embeddings(&graph, &xt, &model)?;
        let forest = ForestModel::fit(&rows_of(&h, &nodes), &labels, &det.forest, derive_seed(cfg.seed, "forest.final"))?;
        ck.sections.push((TREE, forest.to_section()));
    }
    out.bytes("detector.ckpt", &ck.to_bytes())?;
    let mut report = cv.report;
    report.meta = meta;
    out.json("report.json", &json!({ "cv": report, "folds": cv.folds, "final_training": log }))
}

fn train_forecast(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let (data, info) = forecast_data(cfg, inputs)?;
    let fc = &cfg.forecast;
    let outcome = if !cfg.dist.endpoints.is_empty() {
        let mut exec = connect_workers(&cfg.dist, &data)?;
        train_with_executor(&mut exec, &data, fc, cfg.seed)?
    } else if cfg.workers > 1 {
        let timeout = Duration::from_millis(cfg.dist.timeout_ms);
        let mut cluster = LocalCluster::spawn(data.clone(), cfg.workers, timeout, &[])?;
        let outcome = train_with_executor(&mut cluster.executor, &data, fc, cfg.seed);
        cluster.join()?;
        outcome?
    } else {
        train_forecaster(data.clone(), fc, cfg.seed)?
    };
    let fm = ForecastMeta {
        variant: fc.variant,
        hidden: fc.hidden,
        embed_dim: fc.embed_dim,
        t0: data.tg.t0,
        delta: data.tg.delta,
    };
    out.bytes("forecaster.ckpt", &forecast_checkpoint(&outcome, &fm)?.to_bytes())?;
    let report = evaluate_forecaster(&outcome.model, &data, &mut stream_rng(cfg.seed, "forecast.test"))?;
    out.json(
        "report.json",
        &json!({
            "meta": meta,
            "snapshots": info,
            "split": { "train": data.split.n_train, "val": data.split.n_val, "test": data.split.n_test },
            "best_epoch": outcome.best_epoch,
            "best_val_ap": outcome.best_val_ap,
            "epochs": outcome.log,
            "test": report,
        }),
    )
}

fn evaluate(cfg: &RunConfig, inputs: &Inputs, mut meta: RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let ck = Checkpoint::load(cfg.checkpoint.as_deref().expect("validated"))?;
    match section(&ck, &KIND)? {
        b"forecast" => {
            let fm: ForecastMeta = serde_json::from_slice(section(&ck, &CONF)?)?;
            let mut model = ForecastModel::<f32>::new(
                fm.variant,
                LABEL_AGGREGATE_WIDTH,
                fm.hidden,
                fm.embed_dim,
                &mut stream_rng(0, "forecast.init"),
            );
            ck.apply_to(&mut model)?;
            let mut run = cfg.clone();
            run.delta.days = Some(fm.delta as f64 / SECONDS_PER_DAY as f64);
            let (data, info) = forecast_data(&run, inputs)?;
            if data.tg.t0 != fm.t0 {
                log::warn!("snapshot origin {} differs from training origin {}", data.tg.t0, fm.t0);
            }
            let report = evaluate_forecaster(&model, &data, &mut stream_rng(cfg.seed, "forecast.test"))?;
            out.json("report.json", &json!({ "meta": meta, "snapshots": info, "test": report }))
        }
        b"detect" => {
            let dm: DetectMeta = serde_json::from_slice(section(&ck, &CONF)?)?;
            let graph = build_labeled(&edges(cfg, Task::Evaluate, inputs)?, &inputs.labels)?;
            let x = detection_input(cfg, &graph)?;
            if x.width() != dm.input_width || cfg.embeddings.is_some() != dm.fused {
                return Err(Error::Config(format!(
                    "checkpoint expects {} input columns (fused: {}), run provides {}",
                    dm.input_width,
                    dm.fused,
                    x.width()
                )));
            }
            let mut model = SageClassifier::<f32>::new(dm.input_width, dm.hidden, &mut stream_rng(0, "sage.init"));
            ck.apply_to(&mut model)?;
            let xt = Tensor::matrix(x.rows(), x.width(), x.to_f32())?;
            let (nodes, labels) = labeled_nodes(&graph);
            let scored: Vec<(usize, f64)> = match dm.downstream {
                Downstream::Forest => {
                    let forest = ForestModel::from_section(section(&ck, &TREE)?)?;
                    let h = extract_embeddings(&graph, &xt, &model)?;
                    forest.predict(&rows_of(&h, &nodes)).into_iter().map(|p| (p.class, p.probability)).collect()
                }
                Downstream::Head => {
                    let (_, logits) = sage_forward(&graph, &xt, &model)?;
                    let picked = gather_rows(&logits, &nodes);
                    (0..picked.rows())
                        .map(|r| {
                            let l = picked.row(r);
                            (usize::from(l[1] > l[0]), coordnet::nn::sigmoid(f64::from(l[1] - l[0])))
                        })
                        .collect()
                }
            };
            let pred: Vec<usize> = scored.iter().map(|s| s.0).collect();
            let scores: Vec<f64> = scored.iter().map(|s| s.1).collect();
            let r = classification_report(&pred, &labels, Some(&scores))?;
            let mut report = EvalReport::from_folds(&[r]);
            meta.seed = cfg.seed;
            report.meta = meta;
            out.json("report.json", &json!({ "evaluation": report, "nodes": nodes.len() }))
        }
        other => Err(Error::Data(format!("unknown checkpoint kind {:?}", String::from_utf8_lossy(other)))),
    }
}

fn baseline(cfg: &RunConfig, inputs: &Inputs, meta: RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::Baseline, inputs)?, &inputs.labels)?;
    let cv = match cfg.baseline {
        BaselineMethod::Tabular => {
            let table = tabular_features(&inputs.records, &trolls(&inputs.labels), cfg.platform)?;
            let mut w = out.file("tabular.csv")?;
            table.write_csv(&mut w)?;
            w.flush()?;
            tabular_cv(&table, &graph, &cfg.detection, cfg.seed)?
        }
        BaselineMethod::Pagerank => {
            let scores = pagerank(&graph, &cfg.pagerank)?;
            let mut w = out.file("pagerank.csv")?;
            writeln!(w, "user_id,pagerank")?;
            for (v, s) in scores.iter().enumerate() {
                writeln!(w, "{},{}", graph.index().user(v as u32), coordnet::canonical::fmt_g17(*s))?;
            }
            w.flush()?;
            pagerank_cv(&graph, &cfg.pagerank, &cfg.detection, cfg.seed)?
        }
    };
    let mut report = cv.report;
    report.meta = meta;
    out.json("report.json", &json!({ "method": cfg.baseline, "cv": report, "folds": cv.folds }))
}

fn ablate(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::Ablate, inputs)?, &inputs.labels)?;
    let x = detection_input(cfg, &graph)?;
    let groups: Vec<String> = if cfg.ablation.groups.is_empty() {
        x.groups().iter().map(|g| g.name.clone()).collect()
    } else {
        cfg.ablation.groups.clone()
    };
    let names: Vec<&str> = groups.iter().map(String::as_str).collect();
    let report = run_ablation(&graph, &x, &names, cfg.ablation.alone, &cfg.detection, cfg.seed)?;
    out.json("report.json", &json!({ "meta": meta, "ablation": report }))
}

fn robustness(cfg: &RunConfig, inputs: &Inputs, meta: &RunMeta, out: &mut Outputs<'_>) -> Result<()> {
    let graph = build_labeled(&edges(cfg, Task::Robustness, inputs)?, &inputs.labels)?;
    if cfg.embeddings.is_some() {
        log::warn!("robustness uses topology features only; ignoring embeddings");
    }
    let sweep = run_robustness(&graph, |g| Ok(topology_input(g)), &cfg.robustness_levels, &cfg.detection, cfg.seed)?;
    out.bytes("sweep.csv", sweep.to_csv().as_bytes())?;
    out.json("report.json", &json!({ "meta": meta, "sweep": sweep }))
}

fn worker(cfg: &RunConfig) -> Result<()> {
    let inputs = load_inputs(cfg)?;
    let (data, _) = forecast_data(cfg, &inputs)?;
    let addr = cfg.listen.as_deref().expect("validated");
    let listener = TcpListener::bind(addr).map_err(|e| Error::Transport(format!("bind {addr}: {e}")))?;
    log::info!("worker listening on {}", listener.local_addr()?);
    serve(listener, &data, Duration::from_millis(cfg.dist.timeout_ms.saturating_mul(10)))
}
