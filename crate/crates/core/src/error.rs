use alloc::string::String;
use alloc::vec::Vec;

use crate::types::Task;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A value outside its allowed domain.
    #[error("value error: {0}")]
    Value(String),
    /// Invalid or conflicting configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data that violates an operation's precondition.
    #[error("data error: {0}")]
    Data(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("coverage error for {task}: missing predictions for ids [{}]", .missing.join(", "))]
    Coverage { task: Task, missing: Vec<String> },
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("encoder error: {0}")]
    Encoder(String),
}
