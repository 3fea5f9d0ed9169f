//! Library side of the `fedosov` command-line tool.

pub mod commands;
pub mod document;
pub mod error;
pub mod report;

pub use error::CliError;
