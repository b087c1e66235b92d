//! Command-line front end: scenario files, report emission and the `qnet`
//! binary's subcommands.

pub mod app;
pub mod config_io;
pub mod error;
pub mod output;
pub mod units;

pub use app::run;
pub use config_io::{apply_override, parse_config, serialize_config};
pub use error::{CliError, Location};
pub use output::emit_outputs;
