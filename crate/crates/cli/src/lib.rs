//! Library side of the `vqtree` command: config loading, task families on
//! disk, and the run, compare and study drivers.

pub mod compare;
pub mod config;
pub mod error;
pub mod family;
pub mod run;
pub mod study;

pub use error::{exit, CliError, CliResult};
