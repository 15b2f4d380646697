use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] cra_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const FAILURE: u8 = 2;
    pub const PARTIAL: u8 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            _ => exit::FAILURE,
        }
    }
}

/// Stable short name of a library error, used in per-row status cells.
pub fn error_code(e: &cra_core::Error) -> &'static str {
    use cra_core::Error as E;
    match e {
        E::Sizing { .. } => "sizing",
        E::InvalidArgument(_) => "invalid-argument",
        E::DimensionMismatch { .. } => "dimension-mismatch",
        E::NoTwoLevelSystem { .. } => "no-two-level-system",
        E::NotExcitationConserving => "not-excitation-conserving",
        E::IllDefinedResonance(_) => "ill-defined-resonance",
        E::DegenerateSteadyState { .. } => "degenerate-steady-state",
        E::NoConvergence { .. } => "no-convergence",
        E::Residual { .. } => "residual",
        E::StepUnderflow { .. } => "step-underflow",
        E::DegenerateEigenvalue { .. } => "degenerate-eigenvalue",
        E::VacuumState => "vacuum-state",
        E::ZeroVector => "zero-vector",
        E::NonUniformGrid => "non-uniform-grid",
        E::NoBracket { .. } => "no-bracket",
        E::UnknownStrategy { .. } => "unknown-strategy",
        E::Linalg(_) => "linalg",
    }
}
