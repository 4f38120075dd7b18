use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("function diverges at {0}")]
    Divergent(String),

    #[error("no unique threshold: conditional densities coincide (mu = nu = {0})")]
    NoUniqueThreshold(f64),

    #[error("approximation not valid here: {0}")]
    ApproximationInvalid(String),

    #[error("root finding failed: {0}")]
    Convergence(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}, {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("series did not converge: {0}")]
    Series(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
