use thiserror::Error;

/// Errors produced by the oscillator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infinite product did not converge after {terms} factors")]
    NonConvergent { terms: usize },

    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operator is not hermitian")]
    NotHermitian,

    #[error("eigenvalue iteration did not converge within {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("function must carry the absorbed lattice weight")]
    NotRescaled,

    #[error("function already carries the absorbed lattice weight")]
    AlreadyRescaled,

    #[error("mode expansion discards {tail:e} of the squared norm (tolerance {tol:e})")]
    TruncationTail { tail: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
