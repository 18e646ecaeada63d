use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unbounded tail: last sample {last_value} is nonzero and no tail bound was supplied")]
    UnboundedTail { last_value: f64 },

    #[error("non-integrable tail: {0}")]
    NonIntegrableTail(String),

    #[error("tail not converged at T = {horizon}: residual bound {residual:e} exceeds {tol:e}")]
    TailNotConverged { horizon: f64, residual: f64, tol: f64 },

    #[error("tolerance {tol:e} unreachable: achieved error estimate {achieved:e} at step {step:e}")]
    ToleranceUnreachable { tol: f64, achieved: f64, step: f64 },

    #[error("quadrature failed on [{a}, {b}]: error estimate {estimate:e} above {tol:e}")]
    Quadrature { a: f64, b: f64, estimate: f64, tol: f64 },

    #[error("Wronskian drift {drift:e} exceeds {limit:e}")]
    WronskianDrift { drift: f64, limit: f64 },

    #[error("conjugate point: det P = {det:e} at t = {t}")]
    ConjugatePoint { t: f64, det: f64 },

    #[error("not asymptotically nonnegative: {0}")]
    NotAsymptoticallyNonnegative(String),

    #[error("inadmissible profile: volume ratio increases by {increase:e} at r = {radius}")]
    Inadmissible { radius: f64, increase: f64 },

    #[error("no convergence by r = {radius}: last estimates {last} and {previous}")]
    NonConvergence { radius: f64, last: f64, previous: f64 },

    #[error("normalization inconsistency: u'(R) = {boundary_slope}, expected 1 within {tol:e}")]
    NormalizationInconsistent { boundary_slope: f64, tol: f64 },

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
