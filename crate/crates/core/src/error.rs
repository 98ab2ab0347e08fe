use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the geometry, flow, verification and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite metric evaluation at t = {t}, point {point:?}")]
    NonFinite { t: f64, point: Vec<f64> },

    #[error("point {point:?} at t = {t} is outside the domain of {what}")]
    OutOfDomain {
        what: &'static str,
        t: f64,
        point: Vec<f64>,
    },

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid finite-difference spec: {0}")]
    InvalidDiffSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no closed form available for {0}")]
    NotAvailable(String),

    #[error("flow equation does not hold: |RY| = {norm:.3e} exceeds {tol:.3e}")]
    NotRyFlow { norm: f64, tol: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("chart degeneracy: {0}")]
    ChartDegenerate(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("target point ({0}, {1}) is not covered by the source grid")]
    Uncovered(f64, f64),

    #[error("CFL condition violated: dt = {dt:.6e} exceeds the stable limit {max_dt:.6e}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("solution blew up; last valid t = {last_valid_t}")]
    BlowUp { last_valid_t: f64 },
}
