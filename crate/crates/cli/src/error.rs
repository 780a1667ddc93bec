use std::path::PathBuf;

use thiserror::Error;

/// Harness failures, grouped so the binary can map them to exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] ssc_omp::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Parse { path: path.into(), message: message.into() }
    }

    /// Process exit code: 3 config or contract, 4 I/O, 5 parse, 6 numeric.
    /// (Usage errors exit with 2 from the argument parser.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(ssc_omp::Error::Contract(_)) => 3,
            Self::Io { .. } => 4,
            Self::Parse { .. } => 5,
            Self::Core(ssc_omp::Error::Numeric(_)) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
