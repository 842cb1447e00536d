//! Command-line surface for the forecasting pipeline. Every command is a
//! plain function so integration tests can drive it without a subprocess.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{DataSource, ExperimentConfig};
pub use error::{CliError, CliResult, ExitKind};

#[derive(Debug, Parser)]
#[command(name = "epf", version, about = "Day-ahead electricity price forecasting")]
pub struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean an hourly CSV and aggregate it to the daily feature table.
    Ingest {
        #[arg(long)]
        hourly: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use one delivery hour as the target instead of the daily mean.
        #[arg(long)]
        target_hour: Option<u8>,
    },
    /// Generate a synthetic daily table with planted relevant features.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        days: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generator's ground truth as JSON.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Run one feature selector on the training part of a daily table.
    Select {
        #[arg(long)]
        method: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mask JSON destination (default `<out dir>/mask_<method>.json`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk-forward training of one model; writes a bundle per trained fold.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated-experiment evaluation of several models.
    Evaluate {
        #[arg(long)]
        models: Option<String>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise one-sided Diebold–Mariano matrix from evaluation reports.
    Dm {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Surrogate SVR plus Kernel SHAP exports.
    Explain {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Feature for the dependence export (default: top-ranked).
        #[arg(long)]
        feature: Option<String>,
        #[arg(long)]
        interaction: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consolidated summary of an output directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Runs a parsed command line and returns the files written.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.workers {
        Some(0) => Err(CliError::config("--workers must be at least 1")),
        Some(1) => epf_core::par::scoped(epf_core::par::Execution::Sequential, || dispatch(cli.command)),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("worker pool: {e}")))?
            .install(|| dispatch(cli.command)),
        #[cfg(not(feature = "parallel"))]
        Some(_) => dispatch(cli.command),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> CliResult<Vec<PathBuf>> {
    use commands::*;
    match command {
        Command::Ingest {
            hourly,
            out,
            target_hour,
        } => ingest(&hourly, &out, target_hour),
        Command::Synth { seed, days, out, meta } => synth(seed, days, &out, meta.as_deref()),
        Command::Select {
            method,
            data,
            config,
            seed,
            out,
        } => select(&method, &data, config.as_deref(), seed, out.as_deref()),
        Command::Train { model, config, out } => train(&model, &config, out.as_deref()),
        Command::Evaluate { models, config, out } => evaluate(models.as_deref(), &config, out.as_deref()),
        Command::Dm { reports, out } => dm(&reports, out.as_deref()),
        Command::Explain {
            data,
            mask,
            config,
            seed,
            feature,
            interaction,
            out,
        } => explain(&ExplainArgs {
            data: &data,
            mask: &mask,
            config: config.as_deref(),
            seed,
            feature: feature.as_deref(),
            interaction: interaction.as_deref(),
            out: out.as_deref(),
        }),
        Command::Report { dir } => report(&dir),
    }
}
