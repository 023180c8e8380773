use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("quadrature error estimate {err:e} exceeds tolerance {tol:e} after {evals} evaluations")]
    ToleranceNotMet { err: f64, tol: f64, evals: usize },

    #[error("parameter `{name}` = {value} outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("densities live on different base measures: {0}")]
    MeasureMismatch(String),

    #[error("weights do not form a probability vector: {0}")]
    Weights(String),

    #[error("every member has infinite divergence from the truth")]
    AllInfinite,

    #[error("metric returned an invalid distance for member {member}")]
    Metric { member: usize },

    #[error("observation {0} is outside the support of every member")]
    Support(f64),

    #[error("grid refinement failed to shrink the gap (last gap {gap:e})")]
    GridTooCoarse { gap: f64 },

    #[error("residual law fails the exponential moment condition: {0}")]
    Moment(String),

    #[error("design has no points near x0 = {x0}")]
    DesignDegenerate { x0: f64 },

    #[error("sieve sets miss member {member} at n = {n}")]
    CoverageGap { n: usize, member: usize },

    #[error("series truncation cannot reach relative tail {0:e}")]
    Truncation(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain,
    }
}
