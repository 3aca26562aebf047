//! Library surface of the command-line front end, kept separate from the
//! binary so the commands are directly testable.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
pub use config::{OutputFormat, RunConfig};
