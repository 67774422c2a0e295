use thiserror::Error;

/// Errors raised by the chain analysis routines.
///
/// Index tuples carried in variants are 1-based, like every public surface of
/// this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomcError {
    #[error("invalid shape: order {order} and dimension {dim} must both be at least 2")]
    InvalidShape { order: usize, dim: usize },

    #[error("size guard exceeded: {what} needs {required} entries, limit is {limit}")]
    GuardExceeded {
        what: &'static str,
        required: u128,
        limit: usize,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("entry count {found} does not match shape ({expected} = n^m)")]
    EntryCount { expected: usize, found: usize },

    #[error("entry {index:?} is not finite ({value})")]
    NonFinite { index: Vec<usize>, value: f64 },

    #[error("index {index:?} out of range for dimension {dim} and length {len}")]
    OutOfRange {
        index: Vec<usize>,
        dim: usize,
        len: usize,
    },

    #[error("tensor is not stochastic: {0}")]
    NotStochastic(String),

    #[error("operation requires order {expected}, tensor has order {found}")]
    WrongOrder { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chain is not ergodic: {0}")]
    NonErgodicChain(String),

    #[error("no convergence after {iterations} iterations ({detail})")]
    NotConverged { iterations: usize, detail: String },

    #[error("no nonnegative stationary vector found: {0}")]
    NoNonnegativeVectorFound(String),

    #[error("mutual reachability is not transitive: {0}")]
    InconsistentRelation(String),
}

pub type Result<T> = std::result::Result<T, HomcError>;
