use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a mathematical or physical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The brute-force oracle was asked for more atoms than it can hold.
    #[error("capacity exceeded: N = {n} but at most {max} atoms are supported")]
    Capacity { n: usize, max: usize },

    /// The adaptive integrator could not continue.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// A series or quadrature did not reach its tolerance.
    #[error("{what} did not converge (best estimate {estimate})")]
    Convergence { what: String, estimate: f64 },

    /// The coupled-basis blocks of a full-space state disagree across multiplicity labels.
    #[error("state is not permutation invariant: {0}")]
    NotPermutationInvariant(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
