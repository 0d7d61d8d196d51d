use thiserror::Error;

pub type Result<T> = std::result::Result<T, CvmError>;

#[derive(Debug, Error)]
pub enum CvmError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("training did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CvmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CvmError::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        CvmError::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for failures of the numerical routines, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CvmError::Numerical(_) | CvmError::NonConvergence { .. } | CvmError::NonFinite { .. }
        )
    }
}
