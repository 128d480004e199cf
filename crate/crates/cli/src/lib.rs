//! Command-line front end: `gen`, `stats`, `tokenize`, `baseline` and `inspect`.
//!
//! Every command returns a [`Report`] holding the effective configuration
//! (enough to reproduce the output) and a JSON result.

mod baseline;
mod commands;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

pub use baseline::baseline_report;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CSI_FORGE_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations; exit code 2.
    Usage(String),
    /// Data, format or I/O failure; exit code 3.
    Data(csi_forge::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<csi_forge::Error> for CliError {
    fn from(e: csi_forge::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "csi-forge", version, about = "MIMO-OFDM CSI dataset generation and tokenization")]
pub struct Cli {
    /// Report format on stdout.
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a campaign and write shards, statistics and the manifest.
    Gen(GenArgs),
    /// Recompute normalisation statistics of a split.
    Stats(StatsArgs),
    /// Write a masked token export.
    Tokenize(TokenizeArgs),
    /// Classical estimator metrics against the genie sidecar.
    Baseline(BaselineArgs),
    /// Verify a dataset and summarise its contents.
    Inspect(InspectArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Number of sampled configurations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub num_configs: u64,
    /// Runs per configuration, each with its own SNR.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub snr_draws: u64,
    /// Slots per run.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(5..=65535))]
    pub slots: u64,
    /// Slots per sequence; only 5 is supported.
    #[arg(long, default_value_t = 5)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Sequences per shard file.
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    pub shard_size: u64,
    /// Train/validation/test percentages.
    #[arg(long, default_value = "80,10,10")]
    pub split: String,
    /// Skip the genie sidecar (halves the simulation cost).
    #[arg(long)]
    pub no_genie: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "train")]
    pub split: String,
    /// Also write the statistics here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Pretrain,
    Interpolation,
    Forecast,
}

#[derive(Debug, Args, Serialize)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Statistics file; defaults to the dataset's own.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Split to export: train, val, test or all.
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long, value_enum, default_value = "pretrain")]
    pub mode: ModeArg,
    /// Evaluated target feature (interpolation and forecast only).
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub mask_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// SNR threshold of the high-SNR subset, dB.
    #[arg(long, default_value_t = 20.0)]
    pub high_snr_db: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Print the records of this global sequence index.
    #[arg(long)]
    pub sequence: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub effective_config: Value,
    pub result: Value,
}

impl Report {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => serde_json::to_string_pretty(self).expect("report serialises"),
            OutputFormat::Table => {
                let mut out = format!("# {}\n## effective config\n", self.command);
                flatten("", &self.effective_config, &mut out);
                out.push_str("## result\n");
                flatten("", &self.result, &mut out);
                out.trim_end().to_string()
            }
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        _ => out.push_str(&format!("{prefix:<40} {v}\n")),
    }
}

/// Worker threads from [`THREADS_ENV`], if set.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Executes a parsed command on a pool capped by [`THREADS_ENV`].
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Stats(a) => commands::stats(a),
        Command::Tokenize(a) => commands::tokenize(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Inspect(a) => commands::inspect(a),
    })
}

/// Executes and renders.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    Ok(execute(cli)?.render(cli.format))
}
