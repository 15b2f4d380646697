//! Command-line surface: parameter grids in, deterministic tables out.

pub mod commands;
pub mod error;
pub mod grid;
pub mod options;
pub mod presets;
pub mod run;
pub mod spec;
pub mod table;

pub use error::{CliError, CliResult};
pub use options::Cli;
pub use run::execute;
pub use spec::SweepSpec;
