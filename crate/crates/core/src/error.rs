use thiserror::Error;

use crate::fit::FitTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate ellipse: {0}")]
    DegenerateEllipse(String),

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    /// Loss blew past the divergence limit; the trace up to that point is kept.
    #[error("optimization diverged after {} iterations", .trace.steps.len())]
    Diverged { trace: Box<FitTrace> },

    #[error("malformed record at line {line}: {msg}")]
    Record { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateEllipse(_) | Error::DegenerateCovariance(_) | Error::Diverged { .. }
        )
    }
}
