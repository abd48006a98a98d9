use std::path::PathBuf;

use thiserror::Error;

use crate::model::Action;

pub type Result<T, E = CascadeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// A belief was passed to an operation expecting a different number of
    /// incorporated actions. Always a caller bug.
    #[error("belief has {found} actions incorporated, operation expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("action {action} at position {index} has zero probability under the observer model")]
    ImpossibleObservation { index: usize, action: Action },

    #[error("private signal contradicts a belief that rules it out")]
    InconsistentEvidence,

    #[error("enumeration refused: {0}")]
    SizeLimit(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),

    #[error("sweep of {requested} agent-steps exceeds budget of {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl CascadeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CascadeError::Io {
            path: path.into(),
            source,
        }
    }
}
