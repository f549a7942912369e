//! File formats, completion providers, external encoders, checkpoints and
//! the `argqual` command line, on top of `argqual-core`.

pub mod checkpoint;
pub mod cli;
pub mod completion;
pub mod config;
pub mod dataset;
pub mod encoders;
pub mod error;
pub mod fixture;
pub mod fsutil;
pub mod pipeline;
pub mod predio;
pub mod report;
pub mod rundir;

pub use error::{CliError, Result};
