//! Accuracy metrics, the Diebold–Mariano test and the repeated-experiment
//! protocol.

mod dm;
mod experiments;
mod metrics;
mod stats;

pub use dm::{dm_matrix, dm_test, stars, DmCell, DmMatrix, DmResult, DmSide, Forecast, MIN_DM_LENGTH};
pub use experiments::{run_experiments, runs_csv, stats_csv, ExperimentOutcome, MetricStats, RunFailure, RunResult};
pub use metrics::{metrics, metrics_with, MetricOptions, MetricReport};
pub use stats::ExperimentStats;
