//! Command-line front end for coordfit: image and audio codecs, run
//! artifacts and the experiment commands.

pub mod args;
pub mod artifacts;
pub mod codec;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_NUMERICAL};
