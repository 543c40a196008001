//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension N = {0} (need N >= 2)")]
    InvalidDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tolerance {tol:e} not reached after {terms} terms (remainder {remainder:e})")]
    ToleranceNotReached { tol: f64, terms: usize, remainder: f64 },
    #[error("invalid exponent q = {q} (need q > N/s - 1 = {min})")]
    InvalidExponent { q: f64, min: f64 },
    #[error("unreachable target beta {target:e}: amplitude cap {cap:e} exceeded")]
    UnreachableTarget { target: f64, cap: f64 },
    #[error("overflow: exponent argument {0} exceeds 700")]
    Overflow(f64),
    #[error("singular exponent N/s - N + 1 = {0} is not positive")]
    SingularExponent(f64),
    #[error("grid does not contain radius {0} as a node")]
    GridMisaligned(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field does not vanish at the outer radius (value {0})")]
    NonVanishingBoundary(f64),
    #[error("kernel is unbounded at distance 0")]
    KernelDomain,
    #[error("nonintegrable input: {0}")]
    NonIntegrable(String),
    #[error("tail divergence: fitted decay {decay} does not exceed N = {n}")]
    TailDivergence { decay: f64, n: usize },
    #[error("exponent mismatch: 1/q + mu/N + 1/r = {0} (need 2)")]
    ExponentMismatch(f64),
    #[error("no descent: J(t e0) stayed nonnegative up to t = {0:e}")]
    NoDescent(f64),
    #[error("line search rejected every step (residual {0:e})")]
    StepRejected(f64),
    #[error("metric is not positive definite (shift {0:e})")]
    SingularMetric(f64),
    #[error("maximum iterations ({0}) reached")]
    MaxIterations(usize),
    #[error("path collapse: maximizer at path index {0}")]
    PathCollapse(usize),
    #[error("nonpositive field on the fit window")]
    NonPositiveField,
    #[error("wrong dimension: operation needs N = 2, got {0}")]
    WrongDimension(usize),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("config validation error: {0}")]
    ConfigValidation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
