//! Library side of the `vortex-oam` command-line tool: config parsing,
//! result tables and the subcommand drivers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{exit, Failure, Outcome};
pub use config::{parse_config, ConfigError, OutputFormat, RunConfig};
pub use output::{Cell, Table};
