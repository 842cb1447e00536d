mod compare;
mod data;
mod explain;
mod select;
mod train;

pub use compare::{dm, report, Summary, SummaryRow};
pub use data::{ingest, synth};
pub use explain::{explain, ExplainArgs};
pub use select::select;
pub use train::{evaluate, train, EvaluationReport, ModelSummary, TrainReport};

/// Subdirectory of the output directory holding per-model evaluation files.
pub const REPORTS_DIR: &str = "reports";
/// Subdirectory holding trained model bundles.
pub const MODELS_DIR: &str = "models";
