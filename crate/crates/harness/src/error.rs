use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] w4_core::Error),

    #[error(
        "calibration target {target} unreachable: observable spans [{lo:.4}, {hi:.4}] for Tphi in [0.1, 1000] us"
    )]
    Unreachable { target: f64, lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    ResultsFile { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for numerical
    /// non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use w4_core::Error as E;
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Core(E::InvalidConfig(_) | E::InvalidNoiseModel(_)) => 2,
            HarnessError::Unreachable { .. } => 3,
            HarnessError::Core(E::NotConverged { .. } | E::Singular(_)) => 3,
            _ => 1,
        }
    }
}
