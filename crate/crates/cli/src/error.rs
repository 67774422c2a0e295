use std::path::PathBuf;

use homc::error::HomcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed chain file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid chain file: {0}")]
    Spec(String),

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error(transparent)]
    Domain(#[from] HomcError),

    #[error("{0} of the expected outputs did not hold")]
    ExpectationsFailed(usize),
}

impl CliError {
    /// 1 for analysis outcomes (non-ergodic, no convergence, failed
    /// expectations), 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(
                HomcError::NonErgodicChain(_)
                | HomcError::NotConverged { .. }
                | HomcError::NoNonnegativeVectorFound(_)
                | HomcError::InconsistentRelation(_),
            )
            | CliError::ExpectationsFailed(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
