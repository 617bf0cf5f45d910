//! Command-line front end: JSON run configs in, CSV and JSON reports out.
//!
//! Exit codes: 0 success, 1 config error, 2 numeric or output failure,
//! 3 acceptance failure in `compare`.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, run_config, Command, Overrides};
pub use config::RunConfig;
pub use error::CliError;
