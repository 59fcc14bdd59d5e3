//! Command-line front end for the `grand-core` simulator.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{RawConfig, RunConfig};
pub use error::CliError;
pub use run::{run, RunReport};
