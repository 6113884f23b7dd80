//! Command-line front end: degradation synthesis, restoration runs, PSNR and
//! the rate-distortion demos.

pub mod commands;
pub mod config;
pub mod degrade;
pub mod error;
pub mod model;
pub mod synthetic;

pub use commands::{run_cli, Cli};
pub use error::{CliError, CliResult, Code};
