//! Command-line front end of the ingredient HMM toolkit: model files, token
//! files, CSV reports and a seeded synthetic corpus generator.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod model_file;
pub mod synth;

pub use error::{exit, CliError, CliResult};
