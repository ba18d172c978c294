//! Configuration, orchestration and output formats of the `piezobeam` tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

pub use commands::{cmd_check, cmd_limit, cmd_modes, cmd_simulate, CliError, ResultBundle};
pub use config::{parse_config, serialize_config, ConfigError, ConfigErrorKind, ConfigErrors, RunConfig};
