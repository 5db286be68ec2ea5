//! CLI-level errors and their exit-code mapping.

use std::path::PathBuf;

/// Everything that can go wrong between the shell and the library.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The invocation itself is wrong (bad flag combination, unusable
    /// value). Maps to exit code 2, like a parse failure.
    #[error("{0}")]
    Usage(String),

    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A cell that should hold a number does not.
    #[error("{path}:{line}: column '{column}': cannot parse '{value}' as a number")]
    Parse {
        path: PathBuf,
        /// 1-based line number in the file (the header is line 1).
        line: u64,
        column: String,
        value: String,
    },

    #[error("{path}: missing required column '{column}'")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: no data rows")]
    EmptyFile { path: PathBuf },

    /// A regressor column changed value within one group.
    #[error(
        "{path}:{line}: column '{column}': group '{group}' has regressor value {got} \
         but earlier rows had {expected}; regressors must be constant within a group"
    )]
    InconsistentRegressor {
        path: PathBuf,
        line: u64,
        column: String,
        group: String,
        expected: f64,
        got: f64,
    },

    #[error("{path}: malformed CSV")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: invalid simulation spec")]
    Spec {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Core(#[from] varcomp::Error),
}

impl CliError {
    /// Exit code contract: 2 for usage errors, 1 for data or estimation
    /// errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
