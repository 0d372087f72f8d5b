use thiserror::Error;

use crate::exprparse::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("function is not periodic: |f(t) - f(t+T)| = {gap:e} at t = {t}")]
    NotPeriodic { t: f64, gap: f64 },
    #[error("expected a zero-average function, mean is {mean:e}")]
    NotZeroAverage { mean: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("functional ordering violated: lower {lo} exceeds upper {hi}")]
    BracketOrder { lo: f64, hi: f64 },
    #[error("Newton iteration did not converge at order {order} (residual {residual:e})")]
    NonConvergence { order: usize, residual: f64 },
    #[error("a2 vanishes near t = {t}")]
    A2Vanishes { t: f64 },
    #[error("f(t, u0) vanishes near t = {t}")]
    FVanishes { t: f64 },
    #[error("trajectory meets the excluded curve at t = {t}")]
    CurveCrossing { t: f64 },
    #[error("displacement map could not be evaluated anywhere in the scan range")]
    ScanInconclusive,
    #[error("invalid scan range [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("{0} never meets the family average on the scan interval")]
    NoIntersection(&'static str),
    #[error("family direction has zero oscillating part")]
    DegenerateDirection,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
