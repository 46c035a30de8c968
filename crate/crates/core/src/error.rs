use thiserror::Error;

use crate::linprog::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation does not apply to this kind of game (wrong agent count,
    /// not zero-sum, too large for an exhaustive method).
    #[error("unsupported game: {0}")]
    Unsupported(String),

    #[error("unknown classic game {0:?}")]
    UnknownGame(String),

    /// Bayes filter produced zero posterior mass.
    #[error("observation {observation} for agent {agent} is impossible under the prior belief")]
    InconsistentObservation { agent: usize, observation: usize },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Precondition,
    Numerical,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Json(_) | Error::Io(_) | Error::InvalidGame(_) | Error::UnknownGame(_) => {
                ErrorCategory::Parse
            }
            Error::Lp(LpError::IterationLimit { .. })
            | Error::Numerical(_)
            | Error::Diverged { .. } => ErrorCategory::Numerical,
            _ => ErrorCategory::Precondition,
        }
    }
}
