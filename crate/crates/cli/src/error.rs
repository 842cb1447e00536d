use std::fmt;

use epf_core::Error;
use serde::Serialize;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitKind {
    Config,
    Data,
    Training,
    Degenerate,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Data => 3,
            ExitKind::Training => 4,
            ExitKind::Degenerate => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(ExitKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::new(ExitKind::Data, message)
    }

    pub fn code(&self) -> i32 {
        self.kind.code()
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            error: &'a CliError,
            code: i32,
        }
        serde_json::to_string(&Wire {
            error: self,
            code: self.code(),
        })
        .expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

pub fn classify(e: &Error) -> ExitKind {
    match e.root() {
        Error::Config(_) | Error::Registry(_) | Error::Feasibility(_) => ExitKind::Config,
        Error::Training { .. } | Error::Solver { .. } => ExitKind::Training,
        Error::Degenerate(_) | Error::UndefinedMape { .. } => ExitKind::Degenerate,
        _ => ExitKind::Data,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(classify(&e), e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::from(Error::config("x")).code(), 2);
        assert_eq!(CliError::from(Error::schema("x")).code(), 3);
        let t = Error::Training {
            epoch: 3,
            message: "nan".into(),
        }
        .in_model("M4");
        assert_eq!(CliError::from(t).code(), 4);
        assert_eq!(CliError::from(Error::Degenerate("d".into())).code(), 5);
        assert_eq!(CliError::from(Error::Registry("M99".into())).code(), 2);
    }

    #[test]
    fn json_shape() {
        let j = CliError::config("bad").to_json();
        assert_eq!(j, r#"{"error":{"kind":"config","message":"bad"},"code":2}"#);
    }
}
