//! Dense transition tensors and the ⊠ algebra.
//!
//! A tensor of order `m` and dimension `n` holds `n^m` entries stored in
//! linear-index order with the first index varying fastest. Every public
//! index in this module is 1-based: entry `(i1, i2, ..., im)` lives at the
//! 0-based offset `(i1-1) + n(i2-1) + ... + n^(m-1)(im-1)`.
//!
//! Under this layout the trailing indices `(i2, ..., im)` of an entry select a
//! contiguous column of `n` values, so the mode-1 matricization is the same
//! buffer read as an `n x n^(m-1)` column-major matrix.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HomcError, Result};

/// Largest number of dense entries any single tensor or matrix may hold.
pub const DEFAULT_ENTRY_GUARD: usize = 10_000_000;

/// Default tolerance for stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Check that `required` dense entries fit under `limit`.
pub(crate) fn check_guard(what: &'static str, required: u128, limit: usize) -> Result<()> {
    if required > limit as u128 {
        return Err(HomcError::GuardExceeded {
            what,
            required,
            limit,
        });
    }
    Ok(())
}

/// Order `m` and dimension `n` of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorShape {
    order: usize,
    dim: usize,
}

impl TensorShape {
    /// Shape with the default entry guard.
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        Self::with_guard(order, dim, DEFAULT_ENTRY_GUARD)
    }

    pub fn with_guard(order: usize, dim: usize, guard: usize) -> Result<Self> {
        if order < 2 || dim < 2 {
            return Err(HomcError::InvalidShape { order, dim });
        }
        let required = (dim as u128).checked_pow(order as u32).unwrap_or(u128::MAX);
        check_guard("tensor", required, guard)?;
        Ok(Self { order, dim })
    }

    /// Order `m` (number of indices).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Dimension `n` (number of states).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total entry count `n^m`.
    pub fn len(&self) -> usize {
        self.dim.pow(self.order as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of columns `n^(m-1)`, i.e. of histories `(i2, ..., im)`.
    pub fn tail_count(&self) -> usize {
        self.dim.pow(self.order as u32 - 1)
    }

    /// All 1-based index tuples in linear order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(move |off| unravel(off, self.order, self.dim))
    }

    /// All 1-based histories `(i2, ..., im)` in linear order.
    pub fn tails(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.tail_count()).map(move |off| unravel(off, self.order - 1, self.dim))
    }

    pub(crate) fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order {
            return Err(HomcError::OutOfRange {
                index: index.to_vec(),
                dim: self.dim,
                len: self.order,
            });
        }
        ravel(index, self.dim)
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "order {} dimension {}", self.order, self.dim)
    }
}

/// 0-based offset of a 1-based tuple.
fn ravel(index: &[usize], dim: usize) -> Result<usize> {
    let mut offset = 0usize;
    for &i in index.iter().rev() {
        if i == 0 || i > dim {
            return Err(HomcError::OutOfRange {
                index: index.to_vec(),
                dim,
                len: index.len(),
            });
        }
        offset = offset * dim + (i - 1);
    }
    Ok(offset)
}

/// 1-based tuple of length `len` at a 0-based offset.
pub(crate) fn unravel(mut offset: usize, len: usize, dim: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(offset % dim + 1);
        offset /= dim;
    }
    out
}

/// Linear index `i1 + n(i2-1) + ... + n^(l-1)(il-1)` of a 1-based tuple.
///
/// The result is 1-based and lies in `[1, n^l]`.
pub fn linear_index(tuple: &[usize], dim: usize) -> Result<usize> {
    if tuple.is_empty() || dim == 0 {
        return Err(HomcError::OutOfRange {
            index: tuple.to_vec(),
            dim,
            len: tuple.len(),
        });
    }
    ravel(tuple, dim).map(|o| o + 1)
}

/// Inverse of [`linear_index`]: the length-`len` tuple at 1-based position
/// `linear`.
pub fn tuple_at(linear: usize, len: usize, dim: usize) -> Result<Vec<usize>> {
    let count = checked_pow(dim, len);
    match count {
        Some(count) if len > 0 && dim > 0 && (1..=count).contains(&linear) => {
            Ok(unravel(linear - 1, len, dim))
        }
        _ => Err(HomcError::OutOfRange {
            index: vec![linear],
            dim,
            len,
        }),
    }
}

/// The two structured tensors used by the calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialKind {
    /// δ with entry 1 exactly when `i1 == i2`.
    Identity,
    /// All ones.
    Ones,
}

/// Dense real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: TensorShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    /// Wrap a flat buffer in linear-index order.
    pub fn from_vec(shape: TensorShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(HomcError::EntryCount {
                expected: shape.len(),
                found: data.len(),
            });
        }
        if let Some(off) = data.iter().position(|v| !v.is_finite()) {
            return Err(HomcError::NonFinite {
                index: unravel(off, shape.order, shape.dim),
                value: data[off],
            });
        }
        Ok(Self { shape, data })
    }

    /// Build entry by entry from a function of the 1-based index tuple.
    pub fn from_fn(shape: TensorShape, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let data = shape.tuples().map(|t| f(&t)).collect();
        Self::from_vec(shape, data)
    }

    /// Assemble from frontal slices `A(:, :, i3, ..., im)` given in linear
    /// order of `(i3, ..., im)`; each slice is a list of rows (`i1`) holding
    /// one value per column (`i2`). A first-order matrix is one slice.
    pub fn from_slices(order: usize, slices: &[Vec<Vec<f64>>]) -> Result<Self> {
        let dim = slices.first().map(|s| s.len()).unwrap_or(0);
        let shape = TensorShape::new(order, dim)?;
        let expected_slices = dim.pow(order as u32 - 2);
        if slices.len() != expected_slices
            || slices
                .iter()
                .any(|s| s.len() != dim || s.iter().any(|r| r.len() != dim))
        {
            return Err(HomcError::ShapeMismatch {
                expected: format!("{expected_slices} slices of {dim}x{dim}"),
                found: format!("{} slices", slices.len()),
            });
        }
        let mut data = Vec::with_capacity(shape.len());
        for slice in slices {
            for col in 0..dim {
                for row in slice {
                    data.push(row[col]);
                }
            }
        }
        Self::from_vec(shape, data)
    }

    pub fn special(kind: SpecialKind, shape: TensorShape) -> Self {
        match kind {
            SpecialKind::Identity => Self::identity(shape),
            SpecialKind::Ones => Self {
                shape,
                data: vec![1.0; shape.len()],
            },
        }
    }

    pub fn identity(shape: TensorShape) -> Self {
        let n = shape.dim;
        let mut t = Self::zeros(shape);
        for col in 0..shape.tail_count() {
            t.data[col % n + n * col] = 1.0;
        }
        t
    }

    pub fn ones(shape: TensorShape) -> Self {
        Self::special(SpecialKind::Ones, shape)
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.order
    }

    pub fn dim(&self) -> usize {
        self.shape.dim
    }

    /// Entries in linear-index order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Entry at a 1-based tuple.
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.shape.offset(index)?])
    }

    /// Entry at a 1-based tuple.
    ///
    /// Panics when the tuple is malformed; use [`Tensor::entry`] for checked
    /// access.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.entry(index).expect("index tuple out of range")
    }

    /// The column `A(:, i2, ..., im)` for a 1-based history.
    pub fn column(&self, tail: &[usize]) -> Result<&[f64]> {
        if tail.len() + 1 != self.shape.order {
            return Err(HomcError::OutOfRange {
                index: tail.to_vec(),
                dim: self.shape.dim,
                len: self.shape.order - 1,
            });
        }
        let col = ravel(tail, self.shape.dim)?;
        let n = self.shape.dim;
        Ok(&self.data[n * col..n * (col + 1)])
    }

    /// Frontal slice `A(:, :, rest...)` as rows of `i1`, for a 1-based
    /// `rest = (i3, ..., im)`.
    pub fn frontal_slice(&self, rest: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = self.shape.dim;
        let mut rows = vec![vec![0.0; n]; n];
        for i2 in 1..=n {
            let mut tail = vec![i2];
            tail.extend_from_slice(rest);
            for (i1, v) in self.column(&tail)?.iter().enumerate() {
                rows[i1][i2 - 1] = *v;
            }
        }
        Ok(rows)
    }

    fn require_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(HomcError::ShapeMismatch {
                expected: self.shape.to_string(),
                found: other.shape.to_string(),
            });
        }
        Ok(())
    }

    /// `C = A ⊠ B` with `c[i1,i2..im] = Σ_j a[i1,j,i2..i(m-1)] · b[j,i2..im]`.
    pub fn boxtimes(&self, other: &Tensor) -> Result<Tensor> {
        self.require_same_shape(other)?;
        let data = boxtimes_with(
            self.shape,
            &self.data,
            &other.data,
            0.0,
            |a, b| a * b,
            |x, y| x + y,
        );
        Ok(Tensor {
            shape: self.shape,
            data,
        })
    }

    /// `A_d`: keeps entries with `i1 == i2`, zeroes the rest.
    pub fn diagonal_part(&self) -> Tensor {
        let n = self.shape.dim;
        let mut out = Tensor::zeros(self.shape);
        for col in 0..self.shape.tail_count() {
            let at = col % n + n * col;
            out.data[at] = self.data[at];
        }
        out
    }

    /// `self - self_d`: zeroes the entries with `i1 == i2`.
    pub fn off_diagonal_part(&self) -> Tensor {
        let n = self.shape.dim;
        let mut out = self.clone();
        for col in 0..self.shape.tail_count() {
            out.data[col % n + n * col] = 0.0;
        }
        out
    }

    /// Mode-1 matricization: `n` rows and one column per history
    /// `(i2, ..., im)` in linear order.
    pub fn mode1_matricize(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.shape.dim, self.shape.tail_count(), &self.data)
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| f64::max(acc, (a - b).abs())))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| f64::max(acc, v.abs()))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// ⊠ over an arbitrary semiring, shared by the numeric product and the
/// zero-pattern product used for ergodicity.
pub(crate) fn boxtimes_with<T: Copy>(
    shape: TensorShape,
    a: &[T],
    b: &[T],
    zero: T,
    mul: impl Fn(T, T) -> T,
    add: impl Fn(T, T) -> T,
) -> Vec<T> {
    let n = shape.dim;
    // columns of `a` are indexed by (j, i2..i(m-1)); there are n^(m-2) values
    // of the shared middle part
    let middle = n.pow(shape.order as u32 - 2);
    let mut c = vec![zero; shape.len()];
    for col in 0..shape.tail_count() {
        let a_base = n * n * (col % middle);
        let b_col = &b[n * col..n * (col + 1)];
        for i1 in 0..n {
            let mut acc = zero;
            for (j, &bv) in b_col.iter().enumerate() {
                acc = add(acc, mul(a[a_base + i1 + n * j], bv));
            }
            c[i1 + n * col] = acc;
        }
    }
    c
}

/// How a tensor failed the stochasticity check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EntryOutOfRange { index: Vec<usize>, value: f64 },
    ColumnSum { sum: f64 },
}

/// Outcome of [`validate_stochastic`].
#[derive(Debug, Clone, PartialEq)]
pub enum StochasticCheck {
    Stochastic,
    /// The first failing column in linear order, named by its 1-based
    /// history `(i2, ..., im)`.
    Rejected {
        tail: Vec<usize>,
        violation: Violation,
    },
}

impl StochasticCheck {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, StochasticCheck::Stochastic)
    }
}

impl fmt::Display for StochasticCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StochasticCheck::Stochastic => write!(f, "stochastic"),
            StochasticCheck::Rejected {
                violation: Violation::EntryOutOfRange { index, value },
                ..
            } => write!(f, "entry {index:?} = {value} lies outside [0, 1]"),
            StochasticCheck::Rejected {
                tail,
                violation: Violation::ColumnSum { sum },
            } => write!(f, "column for history {tail:?} sums to {sum}, not 1"),
        }
    }
}

/// Accepts iff every entry lies in `[-tol, 1 + tol]` and every column sums to
/// one within `tol`.
pub fn validate_stochastic(tensor: &Tensor, tol: f64) -> StochasticCheck {
    let n = tensor.dim();
    let shape = tensor.shape();
    for (col, values) in tensor.as_slice().chunks_exact(n).enumerate() {
        let tail = || unravel(col, shape.order - 1, n);
        if let Some(i1) = values.iter().position(|&v| v < -tol || v > 1.0 + tol) {
            let mut index = vec![i1 + 1];
            index.extend(tail());
            return StochasticCheck::Rejected {
                tail: tail(),
                violation: Violation::EntryOutOfRange {
                    index,
                    value: values[i1],
                },
            };
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tol {
            return StochasticCheck::Rejected {
                tail: tail(),
                violation: Violation::ColumnSum { sum },
            };
        }
    }
    StochasticCheck::Stochastic
}

/// A transition tensor: entries in `[0, 1]`, every column summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTensor(Tensor);

impl StochasticTensor {
    /// Validates at [`STOCHASTIC_TOL`].
    pub fn new(tensor: Tensor) -> Result<Self> {
        Self::with_tolerance(tensor, STOCHASTIC_TOL)
    }

    pub fn with_tolerance(tensor: Tensor, tol: f64) -> Result<Self> {
        match validate_stochastic(&tensor, tol) {
            StochasticCheck::Stochastic => Ok(Self(tensor)),
            rejected => Err(HomcError::NotStochastic(rejected.to_string())),
        }
    }

    pub fn from_slices(order: usize, slices: &[Vec<Vec<f64>>]) -> Result<Self> {
        Self::new(Tensor::from_slices(order, slices)?)
    }

    pub fn identity(shape: TensorShape) -> Self {
        Self(Tensor::identity(shape))
    }

    /// Caller guarantees stochasticity (products of stochastic tensors).
    pub(crate) fn from_trusted(tensor: Tensor) -> Self {
        Self(tensor)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    /// `P^k` by the literal recursion `P^(k+1) = P^k ⊠ P`, `P^0 = I`.
    ///
    /// ⊠ is not associative for order ≥ 3, so repeated squaring would give a
    /// different (wrong) tensor.
    pub fn power(&self, k: usize) -> StochasticTensor {
        let mut acc = match k {
            0 => return Self::identity(self.shape()),
            _ => self.0.clone(),
        };
        for _ in 1..k {
            acc = acc.boxtimes(&self.0).expect("same shape");
        }
        Self::from_trusted(acc)
    }

    /// Random transition tensor. Each entry is kept with probability
    /// `density` (at least one per column survives) before columns are
    /// normalized.
    pub fn random<R: Rng + ?Sized>(shape: TensorShape, density: f64, rng: &mut R) -> Self {
        let n = shape.dim();
        let mut data = vec![0.0; shape.len()];
        for column in data.chunks_exact_mut(n) {
            for v in column.iter_mut() {
                if rng.random::<f64>() < density {
                    *v = rng.random::<f64>() + 1e-3;
                }
            }
            if column.iter().all(|&v| v == 0.0) {
                column[rng.random_range(0..n)] = 1.0;
            }
            let sum: f64 = column.iter().sum();
            column.iter_mut().for_each(|v| *v /= sum);
        }
        Self(Tensor { shape, data })
    }
}

impl Deref for StochasticTensor {
    type Target = Tensor;

    fn deref(&self) -> &Tensor {
        &self.0
    }
}

impl AsRef<Tensor> for StochasticTensor {
    fn as_ref(&self) -> &Tensor {
        &self.0
    }
}

/// `A ⊠ B` for same-shaped tensors.
pub fn boxtimes(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.boxtimes(b)
}

/// `P^k`; see [`StochasticTensor::power`].
pub fn tensor_power(p: &StochasticTensor, k: usize) -> StochasticTensor {
    p.power(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(m: usize, n: usize) -> TensorShape {
        TensorShape::new(m, n).unwrap()
    }

    #[test]
    fn shape_rejects_degenerate_and_oversized() {
        assert!(matches!(
            TensorShape::new(1, 3),
            Err(HomcError::InvalidShape { .. })
        ));
        assert!(matches!(
            TensorShape::new(3, 1),
            Err(HomcError::InvalidShape { .. })
        ));
        assert!(matches!(
            TensorShape::new(8, 10),
            Err(HomcError::GuardExceeded { .. })
        ));
        assert!(TensorShape::new(7, 10).is_ok());
        assert!(TensorShape::with_guard(3, 4, 63).is_err());
    }

    #[test]
    fn identity_matrix_and_order_three() {
        let i = Tensor::identity(shape(2, 3));
        let m = i.mode1_matricize();
        assert_eq!(m, DMatrix::identity(3, 3));

        let i = Tensor::identity(shape(3, 2));
        for t in i.shape().tuples() {
            let expected = if t[0] == t[1] { 1.0 } else { 0.0 };
            assert_eq!(i.get(&t), expected, "{t:?}");
        }
        assert_eq!(i.get(&[1, 1, 1]), 1.0);
        assert_eq!(i.get(&[1, 1, 2]), 1.0);
        assert_eq!(i.get(&[2, 2, 1]), 1.0);
        assert_eq!(i.get(&[2, 2, 2]), 1.0);
        assert_eq!(i.as_slice().iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn ones_tensor() {
        let e = Tensor::ones(shape(3, 2));
        assert_eq!(e.as_slice(), &[1.0; 8]);
    }

    #[test]
    fn diagonal_part_of_identity_and_ones() {
        let i = Tensor::identity(shape(3, 3));
        assert_eq!(i.diagonal_part(), i);

        let d = Tensor::ones(shape(3, 2)).diagonal_part();
        for t in d.shape().tuples() {
            assert_eq!(d.get(&t), if t[0] == t[1] { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn linear_index_examples() {
        assert_eq!(linear_index(&[1, 1, 1], 4).unwrap(), 1);
        assert_eq!(linear_index(&[3, 2], 4).unwrap(), 7);
        assert_eq!(linear_index(&[4, 4, 4], 4).unwrap(), 64);
        assert_eq!(tuple_at(7, 2, 4).unwrap(), vec![3, 2]);
        assert!(linear_index(&[5, 1], 4).is_err());
        assert!(linear_index(&[0, 1], 4).is_err());
        assert!(tuple_at(0, 2, 4).is_err());
        assert!(tuple_at(17, 2, 4).is_err());
    }

    #[test]
    fn index_round_trip_order_four_dim_three() {
        let s = shape(4, 3);
        for (pos, t) in s.tuples().enumerate() {
            let lin = linear_index(&t, 3).unwrap();
            assert_eq!(lin, pos + 1);
            assert_eq!(tuple_at(lin, 4, 3).unwrap(), t);
        }
    }

    #[test]
    fn matricize_identity_order_three() {
        let p0 = Tensor::identity(shape(3, 4)).mode1_matricize();
        assert_eq!(p0.shape(), (4, 16));
        for i in 1..=4 {
            for col in 1..=16 {
                let tail = tuple_at(col, 2, 4).unwrap();
                let expected = if tail[0] == i { 1.0 } else { 0.0 };
                assert_eq!(p0[(i - 1, col - 1)], expected);
            }
        }
    }

    #[test]
    fn matricize_order_four_block_layout() {
        // encode each entry as a decimal of its indices to read the layout off
        let t = Tensor::from_fn(shape(4, 2), |ix| {
            (ix[0] * 1000 + ix[1] * 100 + ix[2] * 10 + ix[3]) as f64
        })
        .unwrap();
        let m = t.mode1_matricize();
        let row1 = [1111., 1211., 1121., 1221., 1112., 1212., 1122., 1222.];
        let row2 = [2111., 2211., 2121., 2221., 2112., 2212., 2122., 2222.];
        for c in 0..8 {
            assert_eq!(m[(0, c)], row1[c]);
            assert_eq!(m[(1, c)], row2[c]);
        }
    }

    #[test]
    fn matricize_matrix_is_identity_map() {
        let a = Tensor::from_slices(2, &[vec![vec![0.1, 0.7], vec![0.9, 0.3]]]).unwrap();
        let m = a.mode1_matricize();
        assert_eq!(m[(0, 1)], 0.7);
        assert_eq!(m[(1, 0)], 0.9);
    }

    #[test]
    fn boxtimes_is_matrix_product_for_order_two() {
        let a = Tensor::from_slices(2, &[vec![vec![1., 2.], vec![3., 4.]]]).unwrap();
        let b = Tensor::from_slices(2, &[vec![vec![5., 6.], vec![7., 8.]]]).unwrap();
        let c = a.boxtimes(&b).unwrap().mode1_matricize();
        let expected = a.mode1_matricize() * b.mode1_matricize();
        assert_eq!(c, expected);
    }

    #[test]
    fn boxtimes_rejects_shape_mismatch() {
        let a = Tensor::zeros(shape(3, 2));
        let b = Tensor::zeros(shape(3, 3));
        assert!(matches!(
            a.boxtimes(&b),
            Err(HomcError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn uniform_chain_is_power_invariant() {
        let u = StochasticTensor::new(Tensor::from_vec(shape(3, 3), vec![1.0 / 3.0; 27]).unwrap())
            .unwrap();
        let sq = u.boxtimes(&u).unwrap();
        assert!(sq.max_abs_diff(&u).unwrap() < 1e-15);
        assert_eq!(u.power(0).tensor(), &Tensor::identity(u.shape()));
        assert_eq!(u.power(1), u);
    }

    #[test]
    fn validate_rejects_ones_and_perturbation() {
        let e = Tensor::ones(shape(3, 3));
        match validate_stochastic(&e, 1e-12) {
            StochasticCheck::Rejected {
                tail,
                violation: Violation::ColumnSum { sum },
            } => {
                assert_eq!(tail, vec![1, 1]);
                assert_eq!(sum, 3.0);
            }
            other => panic!("unexpected {other:?}"),
        }

        let mut data = vec![0.5; 8];
        data[5] += 1e-6;
        let p = Tensor::from_vec(shape(3, 2), data).unwrap();
        assert!(!validate_stochastic(&p, 1e-12).is_stochastic());
        assert!(validate_stochastic(&p, 1e-5).is_stochastic());
        match validate_stochastic(&p, 1e-12) {
            StochasticCheck::Rejected { tail, .. } => assert_eq!(tail, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_reports_negative_entry() {
        let p = Tensor::from_slices(2, &[vec![vec![1.2, 0.5], vec![-0.2, 0.5]]]).unwrap();
        match validate_stochastic(&p, 1e-12) {
            StochasticCheck::Rejected {
                violation: Violation::EntryOutOfRange { index, .. },
                ..
            } => assert_eq!(index, vec![1, 1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        let s = shape(2, 2);
        assert!(matches!(
            Tensor::from_vec(s, vec![0.0; 3]),
            Err(HomcError::EntryCount { .. })
        ));
        assert!(matches!(
            Tensor::from_vec(s, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(HomcError::NonFinite { .. })
        ));
    }

    #[test]
    fn frontal_slices_round_trip() {
        let slices = vec![
            vec![vec![0.1, 0.2], vec![0.9, 0.8]],
            vec![vec![0.3, 0.4], vec![0.7, 0.6]],
        ];
        let t = Tensor::from_slices(3, &slices).unwrap();
        assert_eq!(t.get(&[1, 2, 1]), 0.2);
        assert_eq!(t.get(&[2, 1, 2]), 0.7);
        assert_eq!(t.frontal_slice(&[2]).unwrap(), slices[1]);
        assert_eq!(t.column(&[2, 1]).unwrap(), &[0.2, 0.8]);
    }
}
