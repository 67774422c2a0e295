//! Stationary distributions of the reduced chain and limiting distributions
//! of the original chain.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{HomcError, Result};
use crate::reduction::ReducedChain;
use crate::tensor::{StochasticTensor, Tensor};

/// Stop the averaged power iteration once successive iterates differ by less
/// than this in max-norm.
pub const CESARO_STEP_TOL: f64 = 1e-12;
pub const CESARO_MAX_ITERATIONS: usize = 1_000_000;
/// Invariant bounds on any returned stationary vector.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
pub const STATIONARY_SUM_TOL: f64 = 1e-10;
pub const NEGATIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    /// Power iteration on `(I + Q) / 2` from the uniform vector. Averaging
    /// each iterate with its image removes the oscillation of periodic
    /// chains; the fixed points are exactly those of `Q`.
    Cesaro,
    /// Null vector of `Q - I` restricted to a closed class of the reduced
    /// chain, found by elimination.
    Nullspace,
    /// Supplied by the caller and checked.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub xi: Vec<f64>,
    pub method: StationaryMethod,
    /// `‖Qξ - ξ‖∞`.
    pub residual: f64,
}

impl StationaryDistribution {
    /// Check a caller-supplied vector against the stationary invariants.
    pub fn from_vector(q: &ReducedChain, xi: Vec<f64>) -> Result<Self> {
        validated(q, xi, StationaryMethod::Supplied)
    }
}

pub fn stationary_residual(q: &ReducedChain, xi: &[f64]) -> f64 {
    let v = DVector::from_column_slice(xi);
    (q.matrix() * &v - &v).amax()
}

fn validated(
    q: &ReducedChain,
    xi: Vec<f64>,
    method: StationaryMethod,
) -> Result<StationaryDistribution> {
    if xi.len() != q.size() {
        return Err(HomcError::ShapeMismatch {
            expected: format!("stationary vector of length {}", q.size()),
            found: format!("length {}", xi.len()),
        });
    }
    if let Some(i) = xi.iter().position(|v| *v < -NEGATIVITY_TOL) {
        return Err(HomcError::NoNonnegativeVectorFound(format!(
            "entry {} ({}) = {}",
            i + 1,
            q.label(i + 1),
            xi[i]
        )));
    }
    let sum: f64 = xi.iter().sum();
    if (sum - 1.0).abs() > STATIONARY_SUM_TOL {
        return Err(HomcError::InvalidArgument(format!(
            "stationary vector sums to {sum}"
        )));
    }
    let residual = stationary_residual(q, &xi);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(HomcError::InvalidArgument(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )));
    }
    Ok(StationaryDistribution {
        xi,
        method,
        residual,
    })
}

fn cesaro(q: &ReducedChain) -> Result<StationaryDistribution> {
    let size = q.size();
    let mut x = DVector::from_element(size, 1.0 / size as f64);
    for _ in 0..CESARO_MAX_ITERATIONS {
        let next = (q.matrix() * &x + &x) * 0.5;
        let step = (&next - &x).amax();
        x = next;
        if step < CESARO_STEP_TOL {
            let sum = x.sum();
            let xi = x.iter().map(|v| v / sum).collect();
            return validated(q, xi, StationaryMethod::Cesaro);
        }
    }
    Err(HomcError::NotConverged {
        iterations: CESARO_MAX_ITERATIONS,
        detail: "averaged power iteration for the stationary vector".into(),
    })
}

/// Unique stationary vector supported on one closed class.
fn class_vector(q: &ReducedChain, class: &[usize]) -> Result<StationaryDistribution> {
    let c = class.len();
    let mut a = DMatrix::from_fn(c, c, |r, k| {
        q.matrix()[(class[r], class[k])] - if r == k { 1.0 } else { 0.0 }
    });
    // rank c - 1 on an irreducible block: swap one equation for Σξ = 1
    a.row_mut(c - 1).fill(1.0);
    let mut b = DVector::zeros(c);
    b[c - 1] = 1.0;
    let scale = a.amax();
    let lu = a.lu();
    let degenerate = lu.u().diagonal().iter().any(|d| d.abs() < 1e-12 * scale);
    let local = match lu.solve(&b) {
        Some(x) if !degenerate => x,
        _ => {
            return Err(HomcError::NoNonnegativeVectorFound(format!(
                "null space of Q - I on class starting at {} is not one-dimensional",
                q.label(class[0] + 1)
            )))
        }
    };
    let mut xi = vec![0.0; q.size()];
    for (k, &s) in class.iter().enumerate() {
        xi[s] = local[k];
    }
    validated(q, xi, StationaryMethod::Nullspace)
}

/// The extreme stationary distributions, one per closed class of the
/// reduced chain (ordered by smallest member). Every stationary distribution
/// is a convex combination of these.
pub fn stationary_basis(q: &ReducedChain) -> Result<Vec<StationaryDistribution>> {
    q.closed_classes()
        .iter()
        .map(|class| class_vector(q, class))
        .collect()
}

pub fn stationary_distribution(
    q: &ReducedChain,
    method: StationaryMethod,
) -> Result<StationaryDistribution> {
    match method {
        StationaryMethod::Cesaro => cesaro(q),
        StationaryMethod::Nullspace => stationary_basis(q)?
            .into_iter()
            .next()
            .ok_or_else(|| HomcError::NoNonnegativeVectorFound("no closed class".into())),
        StationaryMethod::Supplied => Err(HomcError::InvalidArgument(
            "supplied vectors go through StationaryDistribution::from_vector".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ViaStationary,
    ViaPowers,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingDistribution {
    pub pi: Vec<f64>,
    pub provenance: Provenance,
}

/// `π = P^(0) ξ` with `P^(0)` the mode-1 matricization of the identity
/// tensor: `π_i` sums `ξ` over the histories whose newest state is `i`.
pub fn limiting_distribution(
    p: &StochasticTensor,
    xi: &StationaryDistribution,
) -> Result<LimitingDistribution> {
    if xi.xi.len() != p.shape().tail_count() {
        return Err(HomcError::ShapeMismatch {
            expected: format!("stationary vector of length {}", p.shape().tail_count()),
            found: format!("length {}", xi.xi.len()),
        });
    }
    let p0 = Tensor::identity(p.shape()).mode1_matricize();
    let pi = p0 * DVector::from_column_slice(&xi.xi);
    Ok(LimitingDistribution {
        pi: pi.iter().copied().collect(),
        provenance: Provenance::ViaStationary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLimit {
    pub distribution: LimitingDistribution,
    /// `max_i1 (max_tail - min_tail) p^(k)[i1, tail]` at the final `k`.
    pub spread: f64,
    pub steps: usize,
}

fn tail_spread(pk: &Tensor) -> f64 {
    let n = pk.dim();
    let columns: Vec<&[f64]> = pk.as_slice().chunks_exact(n).collect();
    (0..n)
        .map(|i| {
            let (lo, hi) = columns
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    (lo.min(c[i]), hi.max(c[i]))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Follow `P^k` until every column agrees, i.e. `P^k ≈ π ⊗ e ⊗ ... ⊗ e`.
pub fn limit_via_powers(p: &StochasticTensor, tol: f64, max_steps: usize) -> Result<PowerLimit> {
    let mut pk = p.tensor().clone();
    for k in 1..=max_steps {
        if k > 1 {
            pk = pk.boxtimes(p)?;
        }
        let spread = tail_spread(&pk);
        if spread < tol {
            return Ok(PowerLimit {
                distribution: LimitingDistribution {
                    pi: pk.as_slice()[..p.dim()].to_vec(),
                    provenance: Provenance::ViaPowers,
                },
                spread,
                steps: k,
            });
        }
    }
    Err(HomcError::NotConverged {
        iterations: max_steps,
        detail: format!("tail spread of P^k stayed at {:e}", tail_spread(&pk)),
    })
}
