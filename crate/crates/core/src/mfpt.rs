//! Mean first passage times.
//!
//! For a chain with transition tensor `P` the mean first passage times solve
//! `μ = E + (μ - μ_d) ⊠ P`, i.e. for every tuple `t = (i1, ..., im)`
//!
//! ```text
//! μ[t] - Σ_{j ≠ i1} p[j, i2..im] · μ[i1, j, i2..i(m-1)] = 1
//! ```
//!
//! The system is nonsingular exactly when the chain is ergodic, so the solver
//! doubles as an ergodicity test.

use nalgebra::{DMatrix, DVector};

use crate::error::{HomcError, Result};
use crate::reduction::ReducedChain;
use crate::tensor::{check_guard, unravel, StochasticTensor, Tensor, DEFAULT_ENTRY_GUARD};

/// Pivots smaller than this, relative to the largest coefficient, mean the
/// system is singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;
/// Largest acceptable residual of a solution.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MfptTensor {
    pub mu: Tensor,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfptMatrix {
    /// `m[i, j]`: expected steps to reach `i` starting from `j`.
    pub m: DMatrix<f64>,
    /// Diagonal part of `m`.
    pub md: DMatrix<f64>,
    pub residual: f64,
}

/// Coefficient matrix and right-hand side for a flat transition array of the
/// given order and dimension. Unknowns are in linear-index order.
fn assemble(order: usize, n: usize, p: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let unknowns = p.len();
    check_guard(
        "mean first passage system",
        (unknowns as u128).pow(2),
        DEFAULT_ENTRY_GUARD,
    )?;
    let middle = n.pow(order as u32 - 2);
    let mut a = DMatrix::<f64>::identity(unknowns, unknowns);
    for row in 0..unknowns {
        let (i1, col) = (row % n, row / n);
        let base = i1 + n * n * (col % middle);
        for j in (0..n).filter(|&j| j != i1) {
            a[(row, base + n * j)] -= p[j + n * col];
        }
    }
    Ok((a, DVector::from_element(unknowns, 1.0)))
}

/// The linear system `A μ = 1` behind [`solve_mfpt`], unknowns in
/// linear-index order of the tuple.
pub fn assemble_mfpt_system(p: &StochasticTensor) -> Result<(DMatrix<f64>, DVector<f64>)> {
    assemble(p.order(), p.dim(), p.as_slice())
}

/// LU solve with partial pivoting; a tiny relative pivot is reported as a
/// non-ergodic chain.
pub fn solve_checked(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    if let Some((k, pivot)) = u
        .diagonal()
        .iter()
        .enumerate()
        .find(|(_, d)| d.abs() < SINGULAR_PIVOT_TOL * scale)
    {
        return Err(HomcError::NonErgodicChain(format!(
            "mean first passage system is singular (pivot {k} = {pivot:e})"
        )));
    }
    lu.solve(b)
        .ok_or_else(|| HomcError::NonErgodicChain("mean first passage system is singular".into()))
}

fn residual_flat(order: usize, n: usize, p: &[f64], mu: &[f64]) -> f64 {
    let middle = n.pow(order as u32 - 2);
    (0..mu.len())
        .map(|row| {
            let (i1, col) = (row % n, row / n);
            let base = i1 + n * n * (col % middle);
            let sum: f64 = (0..n)
                .filter(|&j| j != i1)
                .map(|j| p[j + n * col] * mu[base + n * j])
                .sum();
            (mu[row] - 1.0 - sum).abs()
        })
        .fold(0.0, f64::max)
}

/// Max-norm of `μ - E - (μ - μ_d) ⊠ P`.
pub fn mfpt_residual(p: &StochasticTensor, mu: &Tensor) -> Result<f64> {
    if p.shape() != mu.shape() {
        return Err(HomcError::ShapeMismatch {
            expected: p.shape().to_string(),
            found: mu.shape().to_string(),
        });
    }
    Ok(residual_flat(
        p.order(),
        p.dim(),
        p.as_slice(),
        mu.as_slice(),
    ))
}

/// Mean first passage time tensor of an ergodic chain.
pub fn solve_mfpt(p: &StochasticTensor) -> Result<MfptTensor> {
    let (a, b) = assemble_mfpt_system(p)?;
    let x = solve_checked(a, &b)?;
    let mu = Tensor::from_vec(p.shape(), x.iter().copied().collect())?;
    let residual = mfpt_residual(p, &mu)?;
    check_solution(mu.as_slice(), residual, p.order(), p.dim())?;
    Ok(MfptTensor { mu, residual })
}

fn check_solution(values: &[f64], residual: f64, order: usize, n: usize) -> Result<()> {
    if residual > RESIDUAL_TOL {
        return Err(HomcError::NonErgodicChain(format!(
            "solution residual {residual:e} exceeds {RESIDUAL_TOL:e}; system is numerically singular"
        )));
    }
    if let Some(off) = values.iter().position(|v| *v < 1.0 - RESIDUAL_TOL) {
        return Err(HomcError::NonErgodicChain(format!(
            "mean passage time at {:?} is {} < 1",
            unravel(off, order, n),
            values[off]
        )));
    }
    Ok(())
}

/// Mean first passage matrix `M = E + (M - M_d) Q` of the reduced chain
/// viewed as a first-order chain.
pub fn mfpt_reduced(q: &ReducedChain) -> Result<MfptMatrix> {
    let size = q.size();
    let data = q.matrix().as_slice();
    let m = if size == 1 {
        DMatrix::from_element(1, 1, 1.0)
    } else {
        let (a, b) = assemble(2, size, data)?;
        let x = solve_checked(a, &b)?;
        DMatrix::from_column_slice(size, size, x.as_slice())
    };
    let residual = if size == 1 {
        0.0
    } else {
        residual_flat(2, size, data, m.as_slice())
    };
    check_solution(m.as_slice(), residual, 2, size)?;
    let md = DMatrix::from_diagonal(&m.diagonal());
    Ok(MfptMatrix { m, md, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::reduction::reduce_chain;
    use crate::tensor::TensorShape;

    #[test]
    fn uniform_chain_mean_three() {
        let sol = solve_mfpt(&fixtures::uniform()).unwrap();
        assert!(sol.mu.as_slice().iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn non_ergodic_chain_is_singular() {
        for p in [
            fixtures::irreducible_not_ergodic(),
            fixtures::no_recurrent(),
            fixtures::two_state(),
            fixtures::mixed_class(),
        ] {
            assert!(matches!(solve_mfpt(&p), Err(HomcError::NonErgodicChain(_))));
        }
    }

    #[test]
    fn residual_by_direct_substitution() {
        let p = fixtures::uniform();
        let three = Tensor::from_vec(p.shape(), vec![3.0; 27]).unwrap();
        assert!(mfpt_residual(&p, &three).unwrap() < 1e-12);
        // each equation: 2 - 1 - (2/3)*2 = -1/3
        let two = Tensor::from_vec(p.shape(), vec![2.0; 27]).unwrap();
        let by_hand = (2.0f64 - 1.0 - 2.0 * (1.0 / 3.0) * 2.0).abs();
        assert!((mfpt_residual(&p, &two).unwrap() - by_hand).abs() < 1e-15);
        let wrong = Tensor::zeros(TensorShape::new(3, 2).unwrap());
        assert!(mfpt_residual(&p, &wrong).is_err());
    }

    #[test]
    fn reduced_uniform_matches_published_matrix() {
        let q = reduce_chain(&fixtures::uniform()).unwrap();
        let sol = mfpt_reduced(&q).unwrap();
        let printed = fixtures::uniform_reduced_mfpt();
        assert!((&sol.m - &printed).amax() < 1e-9);
        assert_eq!(sol.md[(0, 0)], sol.m[(0, 0)]);
        assert_eq!(sol.md[(0, 1)], 0.0);
        // reduced 11 -> 11 differs from the tensor value mu(1,1,1) = 3
        assert!((sol.m[(0, 0)] - 9.0).abs() < 1e-9);
    }

    #[test]
    fn first_order_agrees_with_reduced() {
        let p = StochasticTensor::from_slices(
            2,
            &[vec![
                vec![0.1, 0.5, 0.3],
                vec![0.6, 0.0, 0.3],
                vec![0.3, 0.5, 0.4],
            ]],
        )
        .unwrap();
        let mu = solve_mfpt(&p).unwrap().mu;
        let m = mfpt_reduced(&reduce_chain(&p).unwrap()).unwrap().m;
        assert!((mu.mode1_matricize() - m).amax() < 1e-9);
    }

    #[test]
    fn reduced_chain_of_regular_chain_can_be_singular() {
        let q = reduce_chain(&fixtures::regular_reducible_reduction()).unwrap();
        assert!(matches!(
            mfpt_reduced(&q),
            Err(HomcError::NonErgodicChain(_))
        ));
    }

    #[test]
    fn four_state_solution_properties() {
        let p = fixtures::four_state();
        let sol = solve_mfpt(&p).unwrap();
        assert!(sol.residual <= 1e-9);
        assert!(sol.mu.as_slice().iter().all(|v| *v >= 1.0));
    }
}
