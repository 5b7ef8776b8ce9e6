//! File formats, reports and command implementations behind the `descsys`
//! binary.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;
pub mod trajectory_csv;

pub use commands::{run, Command, Outcome, RunConfig};
pub use error::CliError;
