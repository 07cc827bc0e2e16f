use thiserror::Error;

/// Errors raised by the solvers. Every variant names the operation that failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: invalid input: {msg}")]
    InvalidInput { op: &'static str, msg: String },

    #[error("{op}: t = {t} is outside the protocol domain [{lo}, {hi}]")]
    OutsideDomain { op: &'static str, t: f64, lo: f64, hi: f64 },

    #[error("{op}: no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{op}: integration failed for mode k = {k}: {msg}")]
    IntegrationFailure { op: &'static str, k: f64, msg: String },

    #[error("{op}: {msg}")]
    Numerical { op: &'static str, msg: String },
}

impl Error {
    pub(crate) fn invalid(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidInput { op, msg: msg.into() }
    }

    pub(crate) fn numerical(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical { op, msg: msg.into() }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidInput { .. } | Error::OutsideDomain { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
