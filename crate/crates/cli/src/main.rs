//! Command-line driver for the detection and forecasting pipelines.

mod config;
mod manifest;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coordnet::canonical::to_canonical_json;
use coordnet::{Error, Result};
use serde_json::json;

use config::{load_config, Overrides, Task};
use manifest::Manifest;

#[derive(Parser)]
#[command(name = "coordnet", version, about = "Coordinated-account detection and interaction forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse and validate records; report malformed lines.
    Ingest,
    /// Build the aggregated interaction graph.
    BuildGraph,
    /// Choose the snapshot width from the event stream.
    SelectDelta,
    /// Write topology and tabular feature tables.
    Featurize,
    /// Embed each user's posts with the configured provider.
    Embed,
    /// Cross-validate the graph detector and fit a final model.
    TrainDetect,
    /// Train the snapshot link forecaster.
    TrainForecast,
    /// Score a saved checkpoint on a dataset.
    Evaluate,
    /// Cross-validate the tabular or PageRank baseline.
    Baseline,
    /// Feature-group ablation of the detector.
    Ablate,
    /// Detector accuracy under injected benign edges.
    Robustness,
    /// Generate a synthetic campaign.
    Synth,
    /// Serve forecasting work to a remote coordinator.
    Worker,
}

impl Command {
    fn task(self) -> Task {
        match self {
            Command::Ingest => Task::Ingest,
            Command::BuildGraph => Task::BuildGraph,
            Command::SelectDelta => Task::SelectDelta,
            Command::Featurize => Task::Featurize,
            Command::Embed => Task::Embed,
            Command::TrainDetect => Task::TrainDetect,
            Command::TrainForecast => Task::TrainForecast,
            Command::Evaluate => Task::Evaluate,
            Command::Baseline => Task::Baseline,
            Command::Ablate => Task::Ablate,
            Command::Robustness => Task::Robustness,
            Command::Synth => Task::Synth,
            Command::Worker => Task::Worker,
        }
    }
}

fn execute(task: Task, flags: &Overrides) -> Result<()> {
    let cfg = load_config(task, flags)?;
    let mut manifest = Manifest::new(&cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut echoed = to_canonical_json(&cfg)?;
    echoed.push('\n');
    std::fs::write(cfg.out.join("config.json"), echoed)?;
    manifest.outputs = run::dispatch(task, &cfg, &manifest)?;
    let mut text = to_canonical_json(&manifest)?;
    text.push('\n');
    std::fs::write(cfg.out.join("manifest.json"), text)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command.task(), &cli.flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    let category = e.category();
    let body = json!({ "error": { "category": category.as_str(), "message": e.to_string() } });
    let _ = writeln!(std::io::stderr(), "{body}");
    ExitCode::from(category.exit_code() as u8)
}
