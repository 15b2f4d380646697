//! Steady states, photon statistics and emission spectra of driven,
//! lossy arrays of nonlinear resonators.

pub mod analytics;
pub mod backends;
pub mod error;
pub mod expm;
pub mod hilbert;
pub mod liouville;
pub mod models;
pub mod observables;
pub mod registry;
pub mod sparse;
pub mod weakdrive;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use hilbert::{FockSpace, MomentumBasis, OperatorMatrix, SiteOperatorKind};
pub use liouville::{liouvillian, photon_loss_liouvillian, steady_state, DensityMatrix, Superoperator};
pub use models::{ArrayModel, BhParams, Detuning, JchParams};
pub use registry::Registry;
pub use sparse::CsrMatrix;
