//! Seeded Monte Carlo simulation of chains.
//!
//! Randomness comes from xoshiro256++ streams. Sample `i` of a run with seed
//! `s` uses its own stream derived from `(s, i)`, so estimates do not depend
//! on how samples are scheduled across threads. Samples are aggregated in
//! fixed blocks of [`BLOCK`] indices, each summed in index order, and the
//! block totals are combined in order.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HomcError, Result};
use crate::tensor::StochasticTensor;

pub const BLOCK: u64 = 1024;
pub const DEFAULT_MFPT_HORIZON: usize = 1_000_000;
/// Estimates with a larger censored fraction are flagged unreliable.
pub const MAX_RELIABLE_CENSORING: f64 = 0.01;

/// Generator for sample `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    let base = SplitMix64::seed_from_u64(seed).next_u64();
    Xoshiro256PlusPlus::seed_from_u64(base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Steps a chain forward while tracking the current history as a column
/// offset of the transition tensor.
struct Walker<'a> {
    p: &'a [f64],
    n: usize,
    /// `n^(m-2)`: number of distinct histories once the oldest state drops.
    keep: usize,
    column: usize,
}

impl<'a> Walker<'a> {
    fn new(p: &'a StochasticTensor, column: usize) -> Self {
        let n = p.dim();
        Self {
            p: p.as_slice(),
            n,
            keep: n.pow(p.order() as u32 - 2),
            column,
        }
    }

    /// Inverse-CDF draw from the current column; returns the 0-based state.
    fn step<R: Rng>(&mut self, rng: &mut R) -> usize {
        let col = &self.p[self.n * self.column..self.n * (self.column + 1)];
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        let mut next = None;
        for (j, &pj) in col.iter().enumerate() {
            if pj > 0.0 {
                last_positive = j;
            }
            cumulative += pj;
            if u < cumulative {
                next = Some(j);
                break;
            }
        }
        // rounding left u above the total: the last reachable state takes it
        let s = next.unwrap_or(last_positive);
        self.column = s + self.n * (self.column % self.keep);
        s
    }
}

fn history_column(p: &StochasticTensor, history: &[usize]) -> Result<usize> {
    if history.len() + 1 != p.order() || history.iter().any(|&s| s == 0 || s > p.dim()) {
        return Err(HomcError::OutOfRange {
            index: history.to_vec(),
            dim: p.dim(),
            len: p.order() - 1,
        });
    }
    Ok(crate::tensor::linear_index(history, p.dim())? - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    /// Starting history `(i2, ..., im)`, most recent state first.
    pub history: Vec<usize>,
    /// Visited states, 1-based, excluding the history.
    pub states: Vec<usize>,
    pub seed: u64,
}

/// A single path of `length` steps; uses stream 0 of `seed`.
pub fn sample_trajectory(
    p: &StochasticTensor,
    history: &[usize],
    length: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut walker = Walker::new(p, history_column(p, history)?);
    let mut rng = stream(seed, 0);
    let states = (0..length).map(|_| walker.step(&mut rng) + 1).collect();
    Ok(Trajectory {
        history: history.to_vec(),
        states,
        seed,
    })
}

/// Running first and second moments, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
    censored: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.censored += other.censored;
    }

    fn bernoulli(&self) -> Estimate {
        let n = self.count as f64;
        let mean = self.sum / n;
        Estimate {
            mean,
            std_error: (mean * (1.0 - mean) / n).max(0.0).sqrt(),
            samples: self.count,
            censored: self.censored,
        }
    }

    fn sample_mean(&self) -> Estimate {
        let n = self.count as f64;
        let mean = if self.count == 0 {
            f64::NAN
        } else {
            self.sum / n
        };
        let std_error = if self.count < 2 {
            f64::INFINITY
        } else {
            let var = (self.sum_sq - n * mean * mean).max(0.0) / (n - 1.0);
            (var / n).sqrt()
        };
        Estimate {
            mean,
            std_error,
            samples: self.count,
            censored: self.censored,
        }
    }
}

/// Run `per_sample` for every sample index and fold the results
/// deterministically. `width` is the number of tracked quantities.
fn aggregate<F>(samples: u64, width: usize, seed: u64, per_sample: F) -> Vec<Moments>
where
    F: Fn(&mut Xoshiro256PlusPlus, &mut [Moments]) + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let partials: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![Moments::default(); width];
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let mut rng = stream(seed, i);
                per_sample(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// Samples contributing to `mean`.
    pub samples: u64,
    /// Samples that hit the horizon first; never folded into `mean`.
    pub censored: u64,
}

impl Estimate {
    pub fn censored_fraction(&self) -> f64 {
        let total = self.samples + self.censored;
        if total == 0 {
            0.0
        } else {
            self.censored as f64 / total as f64
        }
    }

    pub fn reliable(&self) -> bool {
        self.censored_fraction() <= MAX_RELIABLE_CENSORING
    }

    /// `|mean - value| ≤ k · std_error + slack`.
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "quantity", rename_all = "snake_case")]
pub enum Quantity {
    /// `p^(k)` at a 1-based tuple.
    Kstep { k: usize, tuple: Vec<usize> },
    /// Probability of reaching `tuple[0]` from history `tuple[1..]` within
    /// `horizon` steps.
    EverReach { tuple: Vec<usize>, horizon: usize },
    /// Mean first passage time; samples censored at `horizon` are counted
    /// separately.
    Mfpt { tuple: Vec<usize>, horizon: usize },
    /// Probability of being in `state` after `t_max` steps from a uniformly
    /// drawn history.
    Occupancy { state: usize, t_max: usize },
}

/// Ever-reaching and mean first passage estimates for every target from one
/// starting history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageEstimates {
    pub history: Vec<usize>,
    pub horizon: usize,
    /// Indexed by target state - 1.
    pub ever: Vec<Estimate>,
    pub mfpt: Vec<Estimate>,
}

/// Walk from `history` until every state has been entered or `horizon`
/// steps pass, recording each state's first entrance time.
pub fn passage_estimates(
    p: &StochasticTensor,
    history: &[usize],
    horizon: usize,
    samples: u64,
    seed: u64,
) -> Result<PassageEstimates> {
    let start = history_column(p, history)?;
    check_samples(samples)?;
    let n = p.dim();
    // slots 0..n: hit indicator, n..2n: passage times
    let totals = aggregate(samples, 2 * n, seed, |rng, acc| {
        let mut walker = Walker::new(p, start);
        let mut hit = vec![0usize; n];
        let mut remaining = n;
        for t in 1..=horizon {
            let s = walker.step(rng);
            if hit[s] == 0 {
                hit[s] = t;
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        for (target, &h) in hit.iter().enumerate() {
            acc[target].push(if h > 0 { 1.0 } else { 0.0 });
            if h > 0 {
                acc[n + target].push(h as f64);
            } else {
                acc[n + target].censored += 1;
            }
        }
    });
    Ok(PassageEstimates {
        history: history.to_vec(),
        horizon,
        ever: totals[..n].iter().map(Moments::bernoulli).collect(),
        mfpt: totals[n..].iter().map(Moments::sample_mean).collect(),
    })
}

/// Distribution of the state after `t_max` steps from a uniformly drawn
/// starting history, one estimate per state.
pub fn occupancy(
    p: &StochasticTensor,
    t_max: usize,
    samples: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    check_samples(samples)?;
    let n = p.dim();
    let histories = p.shape().tail_count();
    let totals = aggregate(samples, n, seed, |rng, acc| {
        let mut walker = Walker::new(p, rng.random_range(0..histories));
        let mut s = walker.column % n;
        for _ in 0..t_max {
            s = walker.step(rng);
        }
        for (state, m) in acc.iter_mut().enumerate() {
            m.push(if state == s { 1.0 } else { 0.0 });
        }
    });
    Ok(totals.iter().map(Moments::bernoulli).collect())
}

fn check_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(HomcError::InvalidArgument(
            "need at least one sample".into(),
        ));
    }
    Ok(())
}

fn split_tuple(p: &StochasticTensor, tuple: &[usize]) -> Result<(usize, Vec<usize>)> {
    p.entry(tuple)?;
    Ok((tuple[0], tuple[1..].to_vec()))
}

pub fn estimate(
    p: &StochasticTensor,
    quantity: &Quantity,
    samples: u64,
    seed: u64,
) -> Result<Estimate> {
    check_samples(samples)?;
    match quantity {
        Quantity::Kstep { k, tuple } => {
            let (target, history) = split_tuple(p, tuple)?;
            let start = history_column(p, &history)?;
            let totals = aggregate(samples, 1, seed, |rng, acc| {
                let mut walker = Walker::new(p, start);
                let mut s = usize::MAX;
                for _ in 0..*k {
                    s = walker.step(rng);
                }
                acc[0].push(if s + 1 == target { 1.0 } else { 0.0 });
            });
            Ok(totals[0].bernoulli())
        }
        Quantity::EverReach { tuple, horizon } => {
            let (target, history) = split_tuple(p, tuple)?;
            Ok(passage_estimates(p, &history, *horizon, samples, seed)?.ever[target - 1])
        }
        Quantity::Mfpt { tuple, horizon } => {
            let (target, history) = split_tuple(p, tuple)?;
            Ok(passage_estimates(p, &history, *horizon, samples, seed)?.mfpt[target - 1])
        }
        Quantity::Occupancy { state, t_max } => {
            if *state == 0 || *state > p.dim() {
                return Err(HomcError::OutOfRange {
                    index: vec![*state],
                    dim: p.dim(),
                    len: 1,
                });
            }
            Ok(occupancy(p, *t_max, samples, seed)?[state - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn certain_column_stays_put() {
        let t = sample_trajectory(&fixtures::two_state(), &[1, 1], 50, 9).unwrap();
        assert!(t.states.iter().all(|s| *s == 1));
    }

    #[test]
    fn deterministic_cycle() {
        let p = StochasticTensor::from_slices(2, &[vec![vec![0., 1.], vec![1., 0.]]]).unwrap();
        let t = sample_trajectory(&p, &[1], 4, 0).unwrap();
        assert_eq!(t.states, vec![2, 1, 2, 1]);
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = fixtures::four_state();
        let a = sample_trajectory(&p, &[1, 2], 200, 42).unwrap();
        let b = sample_trajectory(&p, &[1, 2], 200, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_trajectory(&p, &[1, 2], 200, 43).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn trajectory_respects_zero_transitions() {
        // from history (2,1) the chain moves to 3 with certainty
        let p = fixtures::four_state();
        for seed in 0..20 {
            let t = sample_trajectory(&p, &[2, 1], 1, seed).unwrap();
            assert_eq!(t.states, vec![3]);
        }
    }

    #[test]
    fn bad_history_is_rejected() {
        let p = fixtures::uniform();
        assert!(sample_trajectory(&p, &[1], 3, 0).is_err());
        assert!(sample_trajectory(&p, &[1, 4], 3, 0).is_err());
        assert!(estimate(
            &p,
            &Quantity::Kstep {
                k: 1,
                tuple: vec![1, 1, 1]
            },
            0,
            1
        )
        .is_err());
    }

    #[test]
    fn estimates_are_deterministic() {
        let p = fixtures::four_state();
        let q = Quantity::Mfpt {
            tuple: vec![4, 1, 1],
            horizon: 10_000,
        };
        let a = estimate(&p, &q, 5_000, 7).unwrap();
        let b = estimate(&p, &q, 5_000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_mean_passage_is_three() {
        let p = fixtures::uniform();
        let e = estimate(
            &p,
            &Quantity::Mfpt {
                tuple: vec![2, 1, 3],
                horizon: DEFAULT_MFPT_HORIZON,
            },
            100_000,
            11,
        )
        .unwrap();
        assert!(e.reliable());
        assert!(e.agrees_with(3.0, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn four_state_reaches_one_from_12() {
        let p = fixtures::four_state();
        let e = estimate(
            &p,
            &Quantity::EverReach {
                tuple: vec![1, 1, 2],
                horizon: 1_000,
            },
            100_000,
            3,
        )
        .unwrap();
        assert!(e.agrees_with(1.0, 3.0, 1e-9), "{e:?}");
    }

    #[test]
    fn occupancy_matches_limit() {
        let p = fixtures::four_state();
        let e = estimate(
            &p,
            &Quantity::Occupancy {
                state: 1,
                t_max: 10_000,
            },
            2_000,
            5,
        )
        .unwrap();
        assert!(e.agrees_with(2.0 / 7.0, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn kstep_estimate_matches_power() {
        let p = fixtures::four_state();
        let exact = p.power(3).get(&[2, 1, 1]);
        let e = estimate(
            &p,
            &Quantity::Kstep {
                k: 3,
                tuple: vec![2, 1, 1],
            },
            50_000,
            8,
        )
        .unwrap();
        assert!(e.agrees_with(exact, 4.0, 0.0), "{e:?} vs {exact}");
    }

    #[test]
    fn censoring_is_reported_not_averaged() {
        // state 2 is never re-entered from history (2,2) of the non-ergodic chain
        let p = fixtures::irreducible_not_ergodic();
        let e = passage_estimates(&p, &[2, 2], 50, 1_000, 1).unwrap();
        assert_eq!(e.mfpt[1].censored, 1_000);
        assert_eq!(e.mfpt[1].samples, 0);
        assert!(!e.mfpt[1].reliable());
        assert_eq!(e.ever[1].mean, 0.0);
    }

    #[test]
    fn one_step_frequencies_match_columns() {
        let p = fixtures::regular_reducible_reduction();
        let samples = 40_000u64;
        for history in [[1usize, 1], [2, 3]] {
            let col = p.column(&history).unwrap().to_vec();
            for (j, &pj) in col.iter().enumerate() {
                let mut tuple = vec![j + 1];
                tuple.extend(history);
                let e = estimate(&p, &Quantity::Kstep { k: 1, tuple }, samples, 21).unwrap();
                let bound = 4.0 * (pj * (1.0 - pj) / samples as f64).sqrt();
                assert!((e.mean - pj).abs() <= bound + 1e-12, "{history:?} {j}");
            }
        }
    }
}
