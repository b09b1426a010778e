//! Command-line front end for `consensus-core`: job-spec parsing, the
//! analyze/equilibria/classify/simulate commands and the reproduction demos.

pub mod commands;
pub mod demo;
pub mod error;
pub mod job;

pub use commands::Globals;
pub use error::{CliError, CliResult};
pub use job::JobSpec;
