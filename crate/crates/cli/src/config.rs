use std::path::PathBuf;

use coordnet::baselines::PageRankConfig;
use coordnet::dist::DistConfig;
use coordnet::eval::pipeline::DetectionConfig;
use coordnet::features::PostEmbeddingConfig;
use coordnet::forecast::{ForecastConfig, Variant};
use coordnet::ingest::{ExtractRules, Platform};
use coordnet::synth::CampaignConfig;
use coordnet::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Ingest,
    BuildGraph,
    SelectDelta,
    Featurize,
    Embed,
    TrainDetect,
    TrainForecast,
    Evaluate,
    Baseline,
    Ablate,
    Robustness,
    Synth,
    Worker,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Ingest => "ingest",
            Task::BuildGraph => "build-graph",
            Task::SelectDelta => "select-delta",
            Task::Featurize => "featurize",
            Task::Embed => "embed",
            Task::TrainDetect => "train-detect",
            Task::TrainForecast => "train-forecast",
            Task::Evaluate => "evaluate",
            Task::Baseline => "baseline",
            Task::Ablate => "ablate",
            Task::Robustness => "robustness",
            Task::Synth => "synth",
            Task::Worker => "worker",
        }
    }

    /// Whether edges come from the forecasting extraction rules.
    pub fn temporal(self) -> bool {
        matches!(self, Task::SelectDelta | Task::TrainForecast | Task::Worker)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Tabular,
    Pagerank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// Offline signed token hashing.
    Hashing,
    /// `POST {endpoint}/embed`.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedSettings {
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    /// Width of the hashing provider.
    pub dim: usize,
    pub timeout_ms: u64,
    pub posts: PostEmbeddingConfig,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Hashing,
            endpoint: None,
            api_key_env: None,
            dim: 64,
            timeout_ms: 30_000,
            posts: PostEmbeddingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaSettings {
    /// Fixed snapshot width in days; `None` selects it from the data.
    pub days: Option<f64>,
    pub min_edges: usize,
    /// Candidate grid for automatic selection, in days.
    pub step_days: f64,
}

impl Default for DeltaSettings {
    fn default() -> Self {
        Self { days: None, min_edges: 16, step_days: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationSettings {
    /// Groups to ablate; empty means every topology group.
    pub groups: Vec<String>,
    /// Also train on each group alone.
    pub alone: bool,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self { groups: Vec::new(), alone: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSettings {
    pub preset: String,
    /// Replaces the preset entirely when present.
    pub campaign: Option<CampaignConfig>,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self { preset: "default_small".into(), campaign: None }
    }
}

/// Everything a run needs. Unknown keys are rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub seed: u64,
    pub platform: Platform,
    pub out: PathBuf,
    pub workers: usize,
    pub records: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Edge rules; `None` uses the task default (mentions only for forecasting).
    pub rules: Option<ExtractRules>,
    pub delta: DeltaSettings,
    pub detection: DetectionConfig,
    pub forecast: ForecastConfig,
    pub dist: DistConfig,
    pub pagerank: PageRankConfig,
    pub baseline: BaselineMethod,
    pub ablation: AblationSettings,
    pub robustness_levels: Vec<f64>,
    pub embedding: EmbedSettings,
    pub synth: SynthSettings,
    /// Address `coordnet worker` listens on.
    pub listen: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: None,
            seed: 0,
            platform: Platform::Reddit,
            out: PathBuf::from("run"),
            workers: 1,
            records: None,
            labels: None,
            embeddings: None,
            checkpoint: None,
            rules: None,
            delta: DeltaSettings::default(),
            detection: DetectionConfig::default(),
            forecast: ForecastConfig::default(),
            dist: DistConfig::default(),
            pagerank: PageRankConfig::default(),
            baseline: BaselineMethod::Tabular,
            ablation: AblationSettings::default(),
            robustness_levels: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            embedding: EmbedSettings::default(),
            synth: SynthSettings::default(),
            listen: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// In-process workers for forecasting.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_parser = parse_platform)]
    pub platform: Option<Platform>,
    #[arg(long, global = true)]
    pub records: Option<PathBuf>,
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Learning rate of the task's model.
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// Epoch cap of the task's model.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Hidden width of the task's model.
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    /// Snapshot width in days.
    #[arg(long, global = true)]
    pub delta_days: Option<f64>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<BaselineMethod>,
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub listen: Option<String>,
}

fn parse_platform(s: &str) -> std::result::Result<Platform, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| format!("unknown platform {s:?}"))
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|_| format!("unknown variant {s:?}"))
}

/// Parses a config file; an empty file is the default config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
}

/// Reads the file (if any), applies the flags, and checks the result for `task`.
pub fn load_config(task: Task, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = cfg.task.filter(|&t| t != task) {
        return Err(Error::Config(format!("config is for task {}, invoked as {}", t.name(), task.name())));
    }
    cfg.task = Some(task);
    apply(&mut cfg, task, flags);
    validate(&cfg, task)?;
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, task: Task, f: &Overrides) {
    macro_rules! set {
        ($($flag:ident => $field:expr),* $(,)?) => {
            $(if let Some(v) = f.$flag.clone() { $field = v; })*
        };
    }
    set!(seed => cfg.seed, out => cfg.out, workers => cfg.workers, platform => cfg.platform);
    set!(variant => cfg.forecast.variant, method => cfg.baseline, preset => cfg.synth.preset, folds => cfg.detection.folds);
    if let Some(v) = f.records.clone() {
        cfg.records = Some(v);
    }
    if let Some(v) = f.labels.clone() {
        cfg.labels = Some(v);
    }
    if let Some(v) = f.embeddings.clone() {
        cfg.embeddings = Some(v);
    }
    if let Some(v) = f.checkpoint.clone() {
        cfg.checkpoint = Some(v);
    }
    if let Some(v) = f.listen.clone() {
        cfg.listen = Some(v);
    }
    if let Some(v) = f.delta_days {
        cfg.delta.days = Some(v);
    }
    if task.temporal() {
        set!(lr => cfg.forecast.lr, epochs => cfg.forecast.max_epochs, hidden => cfg.forecast.hidden);
    } else {
        set!(lr => cfg.detection.sage.lr, epochs => cfg.detection.sage.epochs, hidden => cfg.detection.sage.hidden);
    }
}

fn require(field: &Option<PathBuf>, name: &str, task: Task) -> Result<()> {
    match field {
        None => Err(Error::Config(format!("task {} requires `{name}`", task.name()))),
        Some(p) if !p.exists() => Err(Error::Config(format!("`{name}` path {} does not exist", p.display()))),
        Some(_) => Ok(()),
    }
}

fn validate(cfg: &RunConfig, task: Task) -> Result<()> {
    let needs_records = !matches!(task, Task::Synth);
    let needs_labels = matches!(
        task,
        Task::TrainDetect | Task::TrainForecast | Task::Evaluate | Task::Baseline | Task::Ablate | Task::Robustness | Task::Worker
    );
    if needs_records {
        require(&cfg.records, "records", task)?;
    }
    if needs_labels {
        require(&cfg.labels, "labels", task)?;
    }
    if task == Task::Evaluate {
        require(&cfg.checkpoint, "checkpoint", task)?;
    }
    if cfg.embeddings.is_some() {
        require(&cfg.embeddings, "embeddings", task)?;
    }
    if task == Task::Worker && cfg.listen.is_none() {
        return Err(Error::Config("task worker requires `listen`".into()));
    }
    if cfg.workers == 0 {
        return Err(Error::Config("`workers` must be at least 1".into()));
    }
    if let Some(d) = cfg.delta.days {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Config(format!("`delta.days` must be positive, got {d}")));
        }
    }
    if !(cfg.delta.step_days > 0.0 && cfg.delta.step_days.is_finite()) {
        return Err(Error::Config(format!("`delta.step_days` must be positive, got {}", cfg.delta.step_days)));
    }
    if cfg.robustness_levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Config("`robustness_levels` must be non-negative".into()));
    }
    if cfg.embedding.provider == ProviderKind::Http && cfg.embedding.endpoint.is_none() && task == Task::Embed {
        return Err(Error::Config("the http provider requires `embedding.endpoint`".into()));
    }
    Ok(())
}
