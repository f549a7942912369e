//! Algorithmic core for argument validity and novelty prediction.
//!
//! Everything in this crate is pure computation over in-memory values and
//! only needs `alloc`: label mapping and corpus statistics, the reference
//! hashing encoder, multi-task and contrastive training, few-shot prompt
//! construction, the TF-IDF + linear SVM baseline, prediction mixing and
//! the evaluation suite. File formats, network providers and the command
//! line live in the `argqual` crate.

#![no_std]

extern crate alloc;

pub mod baseline;
pub mod contrastive;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub(crate) mod math;
pub mod mtl;
pub mod optim;
pub mod predictions;
pub mod prompt;
pub mod stem;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{ArgumentInstance, Confidence, Label, Split, Task, TaskLabel};
