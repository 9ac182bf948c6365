//! Command-line driver: Monte-Carlo sweeps written as CSV, and a demo that
//! runs one coded multiplication from matrix files.

pub mod cli;
pub mod config;
pub mod demo;
pub mod error;
pub mod experiments;
pub mod matrix_io;

pub use cli::{run, Cli};
pub use error::{exit, CliError};
