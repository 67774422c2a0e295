//! k-step transition tensors, first-passage probabilities and ever-reaching
//! probabilities.

use serde::Serialize;

use crate::error::{HomcError, Result};
use crate::tensor::{StochasticTensor, Tensor, TensorShape};

/// Increments below `tol` for this many consecutive terms end the series.
/// Periodic chains produce isolated zero increments, so one is not enough.
pub const CONSECUTIVE_SMALL_TERMS: usize = 3;

/// `f` counts as equal to one when `1 - f` is at most this.
pub const EQUALS_ONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageOptions {
    /// Max-norm below which a series term counts as negligible.
    pub tol: f64,
    /// Hard cap on the number of series terms.
    pub max_terms: usize,
}

impl Default for PassageOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The last [`CONSECUTIVE_SMALL_TERMS`] terms were all below tolerance.
    Converged,
    /// `max_terms` was reached first.
    MaxTerms,
}

/// Truncated ever-reaching tensor `F = Σ_k F^[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageReport {
    pub shape: TensorShape,
    /// Number of series terms summed.
    pub terms: usize,
    /// Partial sum of the series.
    pub ever: Tensor,
    /// Max-norm of the last term added.
    pub last_increment: f64,
    /// `1 - partial sum` per tuple: the most probability mass that the
    /// untruncated series could still add.
    pub residual: Tensor,
    pub stop: StopReason,
    pub options: PassageOptions,
}

impl PassageReport {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// Ever-reaching probability at a 1-based tuple.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.ever.get(index)
    }
}

/// The terms `F^[1], ..., F^[K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageSeries {
    pub terms: Vec<Tensor>,
}

impl FirstPassageSeries {
    /// `F^[k]`, 1-based.
    pub fn term(&self, k: usize) -> &Tensor {
        &self.terms[k - 1]
    }
}

/// `P^k` for `k ≥ 1`.
pub fn kstep(p: &StochasticTensor, k: usize) -> Result<StochasticTensor> {
    if k == 0 {
        return Err(HomcError::InvalidArgument(
            "step count must be at least 1".into(),
        ));
    }
    Ok(p.power(k))
}

/// Single entry `p^(k)` at a 1-based tuple.
pub fn kstep_entry(p: &StochasticTensor, k: usize, tuple: &[usize]) -> Result<f64> {
    kstep(p, k)?.entry(tuple)
}

/// One step of `F^[k+1] = (F^[k] - F^[k]_d) ⊠ P`.
fn next_term(term: &Tensor, p: &StochasticTensor) -> Tensor {
    term.off_diagonal_part()
        .boxtimes(p)
        .expect("series terms share the chain's shape")
}

pub fn first_passage_series(p: &StochasticTensor, count: usize) -> Result<FirstPassageSeries> {
    if count == 0 {
        return Err(HomcError::InvalidArgument(
            "series length must be at least 1".into(),
        ));
    }
    let mut terms = Vec::with_capacity(count);
    terms.push(p.tensor().clone());
    for k in 1..count {
        let next = next_term(&terms[k - 1], p);
        terms.push(next);
    }
    Ok(FirstPassageSeries { terms })
}

/// Sum the first-passage series until it stops contributing.
pub fn ever_reaching(p: &StochasticTensor, options: &PassageOptions) -> Result<PassageReport> {
    if options.tol.is_nan() || options.tol <= 0.0 || options.max_terms == 0 {
        return Err(HomcError::InvalidArgument(format!(
            "tolerance must be positive and max_terms at least 1 (got {}, {})",
            options.tol, options.max_terms
        )));
    }
    let mut term = p.tensor().clone();
    let mut sum = term.clone();
    let mut terms = 1;
    let mut last_increment = term.max_abs();
    let mut small_run = usize::from(last_increment < options.tol);
    while small_run < CONSECUTIVE_SMALL_TERMS && terms < options.max_terms {
        term = next_term(&term, p);
        for (s, t) in sum.data_mut().iter_mut().zip(term.as_slice()) {
            *s += t;
        }
        terms += 1;
        last_increment = term.max_abs();
        if last_increment < options.tol {
            small_run += 1;
        } else {
            small_run = 0;
        }
    }
    let stop = if small_run >= CONSECUTIVE_SMALL_TERMS {
        StopReason::Converged
    } else {
        StopReason::MaxTerms
    };
    let residual = Tensor::from_vec(p.shape(), sum.as_slice().iter().map(|f| 1.0 - f).collect())?;
    Ok(PassageReport {
        shape: p.shape(),
        terms,
        ever: sum,
        last_increment,
        residual,
        stop,
        options: *options,
    })
}

/// Trend of the return-probability increments `p^(k)[i, i, tail]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnTrend {
    Diverging,
    Converging,
    Undetermined,
}

/// Mean of the trailing increments above which the sum is called diverging.
pub const DIVERGING_INCREMENT: f64 = 1e-2;
/// Largest trailing increment below which the sum is called converging.
pub const CONVERGING_INCREMENT: f64 = 1e-6;
const TREND_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSums {
    /// `S_K = Σ_{k ≤ K} p^(k)[i, i, tail]` for `K = 1, 2, ...`.
    pub partial: Vec<f64>,
    /// The increments `p^(k)[i, i, tail]` themselves.
    pub increments: Vec<f64>,
    /// Heuristic only; no finite computation decides divergence.
    pub trend: ReturnTrend,
}

/// Partial sums of the return probabilities to `state` from history
/// `(state, tail...)`.
pub fn return_sums(
    p: &StochasticTensor,
    state: usize,
    tail: &[usize],
    count: usize,
) -> Result<ReturnSums> {
    if count == 0 {
        return Err(HomcError::InvalidArgument("need at least one term".into()));
    }
    let mut index = vec![state, state];
    index.extend_from_slice(tail);
    p.entry(&index)?;

    let mut increments = Vec::with_capacity(count);
    let mut power = p.tensor().clone();
    increments.push(power.get(&index));
    for _ in 1..count {
        power = power.boxtimes(p)?;
        increments.push(power.get(&index));
    }
    let partial = increments
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();

    let window = &increments[increments.len().saturating_sub(TREND_WINDOW)..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let max = window.iter().cloned().fold(0.0, f64::max);
    let trend = if mean > DIVERGING_INCREMENT {
        ReturnTrend::Diverging
    } else if max < CONVERGING_INCREMENT {
        ReturnTrend::Converging
    } else {
        ReturnTrend::Undetermined
    };
    Ok(ReturnSums {
        partial,
        increments,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn matrix(rows: Vec<Vec<f64>>) -> StochasticTensor {
        StochasticTensor::from_slices(2, &[rows]).unwrap()
    }

    #[test]
    fn kstep_certain_return() {
        let p = fixtures::two_state();
        for k in [1, 2, 7, 40] {
            assert_eq!(kstep_entry(&p, k, &[1, 1, 1]).unwrap(), 1.0);
        }
        assert!(kstep(&p, 0).is_err());
    }

    #[test]
    fn kstep_unreachable_entries_are_exact_zeros() {
        let p = fixtures::two_state();
        let mut pk = p.tensor().clone();
        for k in 1..=50 {
            if k > 1 {
                pk = pk.boxtimes(&p).unwrap();
            }
            assert_eq!(pk.get(&[2, 1, 1]), 0.0, "k = {k}");
        }
        let p = fixtures::irreducible_not_ergodic();
        for k in 2..=50 {
            assert_eq!(kstep_entry(&p, k, &[2, 2, 2]).unwrap(), 0.0);
        }
    }

    #[test]
    fn series_first_term_is_chain() {
        let p = fixtures::four_state();
        let s = first_passage_series(&p, 4).unwrap();
        assert_eq!(s.term(1), p.tensor());
    }

    #[test]
    fn deterministic_two_cycle() {
        let p = matrix(vec![vec![0., 1.], vec![1., 0.]]);
        let s = first_passage_series(&p, 6).unwrap();
        assert_eq!(s.term(1), p.tensor());
        assert_eq!(
            s.term(2).mode1_matricize(),
            nalgebra::DMatrix::identity(2, 2)
        );
        for k in 3..=6 {
            assert_eq!(s.term(k).max_abs(), 0.0);
        }
        let f = ever_reaching(&p, &PassageOptions::default()).unwrap();
        assert!(f.converged());
        assert_eq!(f.ever.as_slice(), &[1.0; 4]);
    }

    #[test]
    fn uniform_geometric_first_passage() {
        // by hand: each step hits the target with probability 1/3
        let p = fixtures::uniform();
        let s = first_passage_series(&p, 12).unwrap();
        for k in 1..=12 {
            let expected = (1.0 / 3.0) * (2.0f64 / 3.0).powi(k as i32 - 1);
            for v in s.term(k).as_slice() {
                assert!((v - expected).abs() < 1e-15, "k={k}: {v} vs {expected}");
            }
        }
    }

    #[test]
    fn four_state_ever_reaching_is_one() {
        let f = ever_reaching(&fixtures::four_state(), &PassageOptions::default()).unwrap();
        assert!(f.converged());
        assert_eq!(f.ever.as_slice().len(), 64);
        for v in f.ever.as_slice() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn no_recurrent_example_values() {
        let f = ever_reaching(&fixtures::no_recurrent(), &PassageOptions::default()).unwrap();
        assert!((f.get(&[3, 3, 1]) - 0.5).abs() < 1e-9);
        assert!((f.get(&[1, 1, 3]) - 0.75).abs() < 1e-9);
        assert!((f.get(&[2, 2, 2]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_class_example_values() {
        let f = ever_reaching(&fixtures::mixed_class(), &PassageOptions::default()).unwrap();
        for (t, v) in [
            ([1, 1, 1], 5.0 / 6.0),
            ([1, 1, 2], 1.0),
            ([1, 1, 3], 1.0),
            ([3, 3, 1], 1.0),
            ([3, 3, 3], 1.0),
            ([3, 1, 1], 0.5),
            ([2, 1, 2], 1.0),
        ] {
            assert!((f.get(&t) - v).abs() < 1e-9, "{t:?}");
        }
    }

    #[test]
    fn max_terms_stop_is_reported() {
        let f = ever_reaching(
            &fixtures::four_state(),
            &PassageOptions {
                tol: 1e-12,
                max_terms: 5,
            },
        )
        .unwrap();
        assert_eq!(f.stop, StopReason::MaxTerms);
        assert_eq!(f.terms, 5);
        assert!(f.residual.as_slice().iter().any(|r| *r > 1e-3));
    }

    #[test]
    fn options_are_validated() {
        let p = fixtures::uniform();
        assert!(ever_reaching(
            &p,
            &PassageOptions {
                tol: 0.0,
                max_terms: 10
            }
        )
        .is_err());
        assert!(ever_reaching(
            &p,
            &PassageOptions {
                tol: 1e-9,
                max_terms: 0
            }
        )
        .is_err());
    }

    #[test]
    fn return_sum_trends() {
        let p = fixtures::no_recurrent();
        for tail in 1..=3 {
            let s = return_sums(&p, 1, &[tail], 200).unwrap();
            assert!(*s.increments.last().unwrap() > 0.01);
            assert_eq!(s.trend, ReturnTrend::Diverging);
            let s = return_sums(&p, 3, &[tail], 200).unwrap();
            assert!(s.increments[190..].iter().all(|v| *v < 1e-6));
            assert_eq!(s.trend, ReturnTrend::Converging);
        }
        let s = return_sums(&fixtures::two_state(), 1, &[1], 25).unwrap();
        for (k, v) in s.partial.iter().enumerate() {
            assert_eq!(*v, (k + 1) as f64);
        }
    }
}
