use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed Matrix Market file: {why}")]
    MatrixMarket { path: String, line: usize, why: String },
    #[error("cannot parse experiment spec {path}: {source}")]
    SpecParse { path: PathBuf, source: serde_json::Error },
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("unknown strategy {0:?} (expected uniform-shape, prescient or swiftiles-overbook)")]
    UnknownStrategy(String),
    #[error("workload {0:?} not found (no such file and not a generator spec)")]
    WorkloadNotFound(String),
    #[error("{context}: {source}")]
    Core { context: String, source: overbook_core::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot encode report: {0}")]
    Encode(String),
}

impl CliError {
    /// Process exit status; every variant maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::MatrixMarket { .. } => 4,
            CliError::SpecParse { .. } => 5,
            CliError::InvalidSpec(_) => 6,
            CliError::UnknownStrategy(_) => 7,
            CliError::WorkloadNotFound(_) => 8,
            CliError::Core { .. } => 9,
            CliError::Output { .. } => 10,
            CliError::Encode(_) => 11,
        }
    }

    pub fn core(context: impl Into<String>, source: overbook_core::Error) -> Self {
        CliError::Core { context: context.into(), source }
    }
}
