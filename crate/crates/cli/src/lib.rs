//! Configuration, orchestration and reports for the `eqvol` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod verify;

pub use config::{parse_config, ExperimentConfig};
pub use error::CliError;
pub use report::emit_report;
pub use verify::{run_verify, VerificationReport};
