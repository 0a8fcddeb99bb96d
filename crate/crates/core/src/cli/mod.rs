//! Command-line front end: one subcommand per pipeline stage, each reading
//! its upstream artifacts from the output directory and writing its own.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::artifacts::ArtifactError;
use crate::config::{ConfigError, PredictorMode};
use crate::predictor::PredictError;
use crate::units::DurationUnit;

pub use commands::run;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISSING_INPUT: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_PREDICTOR: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "typical-duration", version, about = "Typical event-duration acquisition and pseudo-labeled QA generation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat-key TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set k_sentences=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group a phrase list into events (events.jsonl).
    Harvest {
        #[arg(long)]
        phrases: Option<PathBuf>,
    },
    /// Sample evidence sentences per event from a corpus (evidence.jsonl).
    Sample {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Query the predictor for every evidence sentence and unit (verdicts.jsonl).
    Predict {
        #[arg(long, value_enum)]
        mode: Option<PredictorMode>,
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// Vote verdicts into typical durations (typical.jsonl).
    Vote,
    /// Generate pseudo-labeled questions (pseudo.tsv, distribution.csv).
    Generate {
        /// Keep only the N events with the most evidence.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Score predictions against gold with Exact Match and F1.
    Eval(EvalArgs),
    /// Monte-Carlo recovery rate of voting under a noisy predictor.
    Simulate(SimulateArgs),
    /// Summarize the artifacts in the output directory.
    Report,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Keep only gold lines with this category, e.g. "Event Duration".
    #[arg(long)]
    pub category: Option<String>,
    /// Pool answers across questions instead of averaging per-question F1.
    #[arg(long)]
    pub micro: bool,
    /// Warn when the question count differs from the published split size.
    #[arg(long, value_parser = ["train", "test"])]
    pub split: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    Uniform,
    AdjacentGeometric,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "hours")]
    pub unit: DurationUnit,
    /// Second true unit; makes the truth bimodal with `--unit` as episodic.
    #[arg(long)]
    pub habitual: Option<DurationUnit>,
    #[arg(long, default_value_t = 0.5)]
    pub share: f64,
    /// Predictor accuracies, comma separated.
    #[arg(long = "p", value_delimiter = ',', default_value = "0.6")]
    pub p: Vec<f64>,
    /// Sentences per trial, comma separated.
    #[arg(long = "k", value_delimiter = ',', default_value = "50")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub noise: NoiseKind,
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
    #[arg(long, default_value_t = crate::voting::DEFAULT_NEIGHBOR_THRESHOLD)]
    pub threshold: f64,
    /// Eight independent plausibility flags per sentence.
    #[arg(long)]
    pub multi_label: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("missing input {what}: {}", path.display())]
    MissingInput { what: &'static str, path: PathBuf },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Predictor(#[from] PredictError),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Missing(_)) => EXIT_MISSING_INPUT,
            CliError::Config(_) | CliError::Failure(_) => EXIT_FAILURE,
            CliError::Artifact(ArtifactError::Missing { .. }) | CliError::MissingInput { .. } => EXIT_MISSING_INPUT,
            CliError::Artifact(ArtifactError::Schema { .. }) | CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Artifact(ArtifactError::Io { .. }) => EXIT_FAILURE,
            CliError::Predictor(_) => EXIT_PREDICTOR,
        }
    }
}
