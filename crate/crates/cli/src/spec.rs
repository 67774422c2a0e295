//! Chain files: the transition tensor of a chain in JSON.
//!
//! ```json
//! {"order": 2, "states": 2, "entries": [1, 0, 0.5, 0.5, 0, 1, 0, 1]}
//! {"order": 2, "states": 2, "sparse_entries": [{"index": [1, 1, 1], "p": 1}, ...]}
//! ```
//!
//! `order` is the order of the chain (history length), so the tensor has
//! `order + 1` indices. Dense entries are in linear order, first index
//! fastest; sparse indices are 1-based and omitted entries are zero.

use std::fs;
use std::path::Path;

use homc::tensor::{linear_index, StochasticTensor, Tensor, TensorShape};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Column sums in files only need to match 1 to this tolerance, which
/// absorbs the rounding of decimal fractions.
pub const LOAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpecFile {
    pub order: usize,
    pub states: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparse_entries: Option<Vec<SparseEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseEntry {
    pub index: Vec<usize>,
    pub p: f64,
}

impl ChainSpecFile {
    pub fn dense(p: &Tensor) -> Self {
        Self {
            order: p.order() - 1,
            states: p.dim(),
            entries: Some(p.as_slice().to_vec()),
            sparse_entries: None,
        }
    }

    pub fn sparse(p: &Tensor) -> Self {
        let sparse = p
            .shape()
            .tuples()
            .zip(p.as_slice())
            .filter(|(_, v)| **v != 0.0)
            .map(|(index, &p)| SparseEntry { index, p })
            .collect();
        Self {
            order: p.order() - 1,
            states: p.dim(),
            entries: None,
            sparse_entries: Some(sparse),
        }
    }

    pub fn to_tensor(&self) -> Result<StochasticTensor> {
        let shape = TensorShape::new(self.order + 1, self.states)
            .map_err(|e| CliError::Spec(e.to_string()))?;
        let data = match (&self.entries, &self.sparse_entries) {
            (Some(entries), None) => entries.clone(),
            (None, Some(sparse)) => {
                let mut data = vec![0.0; shape.len()];
                let mut seen = vec![false; shape.len()];
                for e in sparse {
                    if e.index.len() != shape.order() {
                        return Err(CliError::Spec(format!(
                            "sparse index {:?} needs {} components",
                            e.index,
                            shape.order()
                        )));
                    }
                    let off = linear_index(&e.index, self.states)
                        .map_err(|err| CliError::Spec(err.to_string()))?
                        - 1;
                    if std::mem::replace(&mut seen[off], true) {
                        return Err(CliError::Spec(format!(
                            "sparse index {:?} appears twice",
                            e.index
                        )));
                    }
                    data[off] = e.p;
                }
                data
            }
            _ => {
                return Err(CliError::Spec(
                    "exactly one of `entries` and `sparse_entries` must be given".into(),
                ))
            }
        };
        let tensor = Tensor::from_vec(shape, data)?;
        Ok(StochasticTensor::with_tolerance(tensor, LOAD_TOL)?)
    }
}

pub fn load(path: &Path) -> Result<StochasticTensor> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let spec: ChainSpecFile = serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    spec.to_tensor()
}
