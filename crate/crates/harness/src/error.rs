//! Harness errors and their process exit codes.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mabeam::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed table: {reason}")]
    Table { path: PathBuf, reason: String },

    #[error("trial {trial}: gave up after {redraws} degenerate drops")]
    TooManyRedraws { trial: usize, redraws: usize },
}

impl HarnessError {
    /// 2 for bad or infeasible input, 3 for solver failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_solver_failure() => 3,
            HarnessError::Core(_)
            | HarnessError::Config(_)
            | HarnessError::TooManyRedraws { .. } => 2,
            HarnessError::Io { .. } | HarnessError::Csv { .. } | HarnessError::Table { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.into(),
            source,
        }
    }
}
