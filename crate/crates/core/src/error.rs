use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid matrix data: {0}")]
    InvalidData(String),

    /// A Cholesky pivot fell at or below the positive-definiteness tolerance.
    #[error("matrix is not positive definite (pivot {pivot} = {value:e}, tolerance {tolerance:e})")]
    NotPositiveDefinite {
        pivot: usize,
        value: f64,
        tolerance: f64,
    },

    /// The small inner matrix of a matrix-inversion-lemma update is singular.
    #[error("inner matrix of the inversion-lemma update is singular (pivot {pivot} = {value:e})")]
    SingularInnerMatrix { pivot: usize, value: f64 },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("accumulated information matrix has not attained full rank (lambda_min = {lambda_min:e})")]
    RankNotAttained { lambda_min: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    /// Wraps a numerical failure with the estimator step at which it happened.
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::AtStep { .. } => self,
            other => Error::AtStep {
                step,
                source: Box::new(other),
            },
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Strips any step annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    /// Step index attached to a numerical failure, if any.
    pub fn step(&self) -> Option<usize> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }

    /// True for failures that signal loss of positive definiteness of the
    /// information matrix (the regularization faded before the data could
    /// take over).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NotPositiveDefinite { .. }
                | Error::SingularInnerMatrix { .. }
                | Error::NoConvergence { .. }
                | Error::RankNotAttained { .. }
        )
    }
}
