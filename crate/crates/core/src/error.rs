use thiserror::Error;

/// Errors raised by the polymer toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} unsupported: the walk must be transient (d >= 3) and d <= {max}", max = crate::lattice_walk::MAX_DIM)]
    Dimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: best estimate {estimate}, error estimate {error:e} above tolerance {tol:e}")]
    NonConvergence { estimate: f64, error: f64, tol: f64 },

    #[error("value {value} lies outside the range of the log-Laplace transform (supremum {sup})")]
    OutOfRange { value: f64, sup: f64 },

    #[error("hypothesis hyp-I not certified: {0}")]
    HypothesisNotCertified(String),

    #[error("instance too large for exact enumeration: {terms} terms exceed the limit {limit}")]
    TooLarge { terms: u128, limit: u128 },

    #[error("importance weights overflow at theta = {theta}; use theta <= {suggested_max}")]
    WeightOverflow { theta: f64, suggested_max: f64 },

    #[error("too few events: {0}")]
    TooFewEvents(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
