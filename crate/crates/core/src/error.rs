use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hilbert space of dimension {dim} exceeds the safety bound {bound}")]
    Sizing { dim: usize, bound: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator {kind} requires a two-level system on every site")]
    NoTwoLevelSystem { kind: &'static str },

    #[error("operator does not conserve excitation number (drive present?)")]
    NotExcitationConserving,

    #[error("resonance is ill-defined: {0}")]
    IllDefinedResonance(String),

    #[error("steady state is not unique: null-space dimension appears to exceed one (rcond = {rcond:e})")]
    DegenerateSteadyState { rcond: f64 },

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("time step underflow at t = {t:e}")]
    StepUnderflow { t: f64 },

    #[error("two eigenvalues share the minimal modulus {modulus:e}")]
    DegenerateEigenvalue { modulus: f64 },

    #[error("photon number vanishes, g2 is undefined")]
    VacuumState,

    #[error("zero vector")]
    ZeroVector,

    #[error("tau grid is not uniform")]
    NonUniformGrid,

    #[error("grid too coarse to bracket the g2 = 1 crossing (bracket [{lo}, {hi}])")]
    NoBracket { lo: f64, hi: f64 },

    #[error("unknown {what} `{name}` (available: {available})")]
    UnknownStrategy {
        what: &'static str,
        name: String,
        available: String,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}
