use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ordering error at line {line}: timestamp {stamp} does not follow its predecessor")]
    Ordering { line: usize, stamp: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("incomplete series: column {column} has a missing value at its {edge} edge")]
    IncompleteSeries { column: String, edge: &'static str },

    #[error("incomplete day {date}: expected 24 hourly rows, found {found}")]
    IncompleteDay { date: String, found: usize },

    #[error("unknown model id {0:?}")]
    Registry(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("MAPE undefined: {zeros} actual values are zero")]
    UndefinedMape { zeros: usize },

    #[error("infeasible request: {0}")]
    Feasibility(String),

    #[error("model {model}: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    /// Wraps an error with the registry id of the model that produced it.
    pub fn in_model(self, model: impl Into<String>) -> Self {
        Error::Model {
            model: model.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through model tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Model { source, .. } => source.root(),
            other => other,
        }
    }
}
