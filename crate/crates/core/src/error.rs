use thiserror::Error;

/// Errors raised by the numerical operations of the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("profile contains a non-finite value at node {node}")]
    NonFiniteProfile { node: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("radius {radius} outside (0, {r_max}]")]
    RadiusOutOfRange { radius: f64, r_max: f64 },
    #[error("shift constant must be positive, got {0}")]
    ShiftNotPositive(f64),
    #[error("shift constant {c} not above threshold {threshold}")]
    ShiftBelowThreshold { c: f64, threshold: f64 },
    #[error("singular linear system (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("metric is not in the admissible decaying class: {0}")]
    NonAdmissibleMetric(String),
    #[error("conformal factor crossed zero at node {node}")]
    NegativeConformalFactor { node: usize },
    #[error("eigenvalue iteration stalled after {iterations} iterations (residual {residual:e})")]
    IterationStalled { iterations: usize, residual: f64 },
    #[error("limit extrapolation did not converge: {0}")]
    LimitNotConverged(String),
    #[error("time step rejected after {halvings} halvings at t = {t}")]
    StepRejected { t: f64, halvings: usize },
    #[error("entropy decreased by {drop:e} between t = {t0} and t = {t1}")]
    MonotonicityViolated { t0: f64, t1: f64, drop: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("growth bound violated at sample {index}: value {value:e} < bound {bound:e}")]
    GrowthBoundViolated { index: usize, value: f64, bound: f64 },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid perturbation spec: {0}")]
    SpecInvalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
