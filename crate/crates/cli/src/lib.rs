//! Command-line front end: configuration, orchestration and serialization
//! of the `ep3` toolkit runs.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use commands::Context;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
