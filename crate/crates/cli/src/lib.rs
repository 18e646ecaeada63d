//! Command-line front end for the `ancgeom` checkers.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use config::{Command, Inputs, Overrides, RunConfig};
pub use emit::emit_plot_data;
pub use error::{CliError, Result};
pub use run::{run, RunOutcome};
