//! Irreducibility, ergodicity, regularity and the classification of states.
//!
//! Ergodicity and regularity are decided on zero patterns: the pattern of
//! `P^(k+1)` is a function of the pattern of `P^k` alone (the boolean ⊠), so
//! the sequence of patterns is eventually periodic and can be followed until
//! it repeats. The decision is then exact rather than a guess at a power
//! cutoff.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{HomcError, Result};
use crate::passage::{PassageReport, EQUALS_ONE_TOL};
use crate::tensor::{boxtimes_with, unravel, StochasticTensor, TensorShape};

pub const DEFAULT_ORBIT_HORIZON: usize = 4096;
/// The subset scan for irreducibility is exhaustive.
pub const MAX_SUBSET_SCAN_STATES: usize = 16;
/// Ever-reaching values above this count as positive.
pub const REACH_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Irreducibility {
    pub irreducible: bool,
    /// First nonempty proper subset `K` (1-based states, bitmask order) that
    /// no transition enters from a history lying entirely outside `K`.
    pub witness: Option<Vec<usize>>,
}

/// Irreducible iff for every nonempty proper `K` some `p[i1, i2..im] > 0`
/// has `i1 ∈ K` and every `i2..im` outside `K`.
pub fn is_irreducible(p: &StochasticTensor) -> Result<Irreducibility> {
    let n = p.dim();
    if n > MAX_SUBSET_SCAN_STATES {
        return Err(HomcError::GuardExceeded {
            what: "irreducibility subset scan (states)",
            required: n as u128,
            limit: MAX_SUBSET_SCAN_STATES,
        });
    }
    let shape = p.shape();
    // per column: states used by the history, states entered with positive probability
    let columns: Vec<(u32, u32)> = p
        .as_slice()
        .chunks_exact(n)
        .enumerate()
        .map(|(col, values)| {
            let history = unravel(col, shape.order() - 1, n)
                .iter()
                .fold(0u32, |acc, s| acc | 1 << (s - 1));
            let entered = values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > 0.0)
                .fold(0u32, |acc, (i, _)| acc | 1 << i);
            (history, entered)
        })
        .collect();
    let full = (1u32 << n) - 1;
    for k in 1..full {
        let escapes = columns
            .iter()
            .any(|&(history, entered)| history & k == 0 && entered & k != 0);
        if !escapes {
            let witness = (0..n)
                .filter(|i| k & (1 << i) != 0)
                .map(|i| i + 1)
                .collect();
            return Ok(Irreducibility {
                irreducible: false,
                witness: Some(witness),
            });
        }
    }
    Ok(Irreducibility {
        irreducible: true,
        witness: None,
    })
}

/// Summary of the zero-pattern orbit `B_1, B_2, ...` of the powers of `P`.
#[derive(Debug, Clone)]
struct PatternOrbit {
    /// Union of all visited patterns.
    ever_positive: Vec<bool>,
    /// First `k` with `B_k` all true.
    first_all_positive: Option<usize>,
    /// Number of distinct patterns visited.
    visited: usize,
    /// Whether a repeat was found within the horizon.
    closed: bool,
}

fn pack(bits: &[bool]) -> Vec<u64> {
    bits.chunks(64)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u64, |acc, (i, b)| acc | (u64::from(*b) << i))
        })
        .collect()
}

fn pattern_orbit(p: &StochasticTensor, horizon: usize) -> PatternOrbit {
    let shape = p.shape();
    let base: Vec<bool> = p.as_slice().iter().map(|v| *v > 0.0).collect();
    let mut seen = HashSet::new();
    let mut ever_positive = vec![false; base.len()];
    let mut first_all_positive = None;
    let mut current = base.clone();
    let mut closed = false;
    for k in 1..=horizon {
        if !seen.insert(pack(&current)) {
            closed = true;
            break;
        }
        ever_positive
            .iter_mut()
            .zip(&current)
            .for_each(|(e, c)| *e |= *c);
        if first_all_positive.is_none() && current.iter().all(|b| *b) {
            first_all_positive = Some(k);
        }
        current = boxtimes_with(shape, &current, &base, false, |a, b| a && b, |a, b| a || b);
    }
    PatternOrbit {
        ever_positive,
        first_all_positive,
        visited: seen.len(),
        closed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Ergodicity {
    Ergodic,
    /// `p^(k)` at `witness` is zero for every `k ≥ 1`.
    NotErgodic {
        witness: Vec<usize>,
    },
    /// The pattern orbit did not close within the horizon.
    Undetermined {
        horizon: usize,
    },
}

impl Ergodicity {
    pub fn is_ergodic(&self) -> bool {
        matches!(self, Ergodicity::Ergodic)
    }
}

/// Constant tuples `(i, ..., i)` first, then the rest in linear order.
fn pick_witness(shape: TensorShape, never_positive: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let n = shape.dim();
    let stride: usize = (0..shape.order()).map(|l| n.pow(l as u32)).sum();
    (0..n)
        .map(|i| i * stride)
        .chain(0..shape.len())
        .find(|&off| never_positive(off))
        .map(|off| unravel(off, shape.order(), n))
}

fn ergodicity_from_orbit(shape: TensorShape, orbit: &PatternOrbit, horizon: usize) -> Ergodicity {
    match pick_witness(shape, |off| !orbit.ever_positive[off]) {
        None => Ergodicity::Ergodic,
        Some(witness) if orbit.closed => Ergodicity::NotErgodic { witness },
        Some(_) => Ergodicity::Undetermined { horizon },
    }
}

/// Ergodic iff every tuple is positive in some power `P^k`, `k ≥ 1`.
pub fn is_ergodic(p: &StochasticTensor, horizon: usize) -> Ergodicity {
    let orbit = pattern_orbit(p, horizon);
    ergodicity_from_orbit(p.shape(), &orbit, horizon)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regularity {
    /// Smallest `k` with `P^k > 0`.
    pub index: Option<usize>,
    pub horizon: usize,
    /// Distinct patterns visited before the orbit closed or the horizon hit.
    pub patterns_visited: usize,
    /// False when the horizon ran out before the orbit closed; an absent
    /// index is then inconclusive.
    pub decided: bool,
}

impl Regularity {
    pub fn is_regular(&self) -> bool {
        self.index.is_some()
    }
}

fn regularity_from_orbit(orbit: &PatternOrbit, horizon: usize) -> Regularity {
    Regularity {
        index: orbit.first_all_positive,
        horizon,
        patterns_visited: orbit.visited,
        decided: orbit.closed || orbit.first_all_positive.is_some(),
    }
}

/// Smallest `k` with `P^k > 0`, if any. Once all positive, every later power
/// stays all positive.
pub fn regularity_index(p: &StochasticTensor, horizon: usize) -> Regularity {
    regularity_from_orbit(&pattern_orbit(p, horizon), horizon)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainAnalysis {
    pub irreducibility: Irreducibility,
    pub ergodicity: Ergodicity,
    pub regularity: Regularity,
}

/// All three structural verdicts from one pattern orbit.
pub fn analyze(p: &StochasticTensor, horizon: usize) -> Result<ChainAnalysis> {
    let orbit = pattern_orbit(p, horizon);
    Ok(ChainAnalysis {
        irreducibility: is_irreducible(p)?,
        ergodicity: ergodicity_from_orbit(p.shape(), &orbit, horizon),
        regularity: regularity_from_orbit(&orbit, horizon),
    })
}

/// The relation `i -> j` on states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reachability {
    n: usize,
    /// Row `i`, column `j` (0-based) holds `i -> j`.
    relation: Vec<Vec<bool>>,
}

impl Reachability {
    /// `i -> j` for 1-based states.
    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.relation[i - 1][j - 1]
    }

    pub fn communicate(&self, i: usize, j: usize) -> bool {
        self.reaches(i, j) && self.reaches(j, i)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.relation
    }
}

fn history_tails(shape: TensorShape) -> Vec<Vec<usize>> {
    let rest = shape.order() - 2;
    let count = shape.dim().pow(rest as u32);
    (0..count).map(|o| unravel(o, rest, shape.dim())).collect()
}

/// `i -> j` iff `i == j` or `f[j, i, tail] > 0` for every tail `(i3..im)`.
pub fn reachability(p: &StochasticTensor, f: &PassageReport) -> Result<Reachability> {
    if f.shape != p.shape() {
        return Err(HomcError::ShapeMismatch {
            expected: p.shape().to_string(),
            found: f.shape.to_string(),
        });
    }
    let n = p.dim();
    let tails = history_tails(p.shape());
    let mut relation = vec![vec![false; n]; n];
    for i in 1..=n {
        for j in 1..=n {
            relation[i - 1][j - 1] = i == j
                || tails.iter().all(|tail| {
                    let mut ix = vec![j, i];
                    ix.extend(tail);
                    f.get(&ix) > REACH_THRESHOLD
                });
        }
    }
    Ok(Reachability { n, relation })
}

/// Equivalence classes of mutual reachability, each sorted, ordered by
/// smallest member. Transitivity is checked rather than assumed.
pub fn communication_classes(reach: &Reachability) -> Result<Vec<Vec<usize>>> {
    let n = reach.dim();
    for a in 1..=n {
        for b in 1..=n {
            if !reach.communicate(a, b) {
                continue;
            }
            for c in 1..=n {
                if reach.communicate(b, c) && !reach.communicate(a, c) {
                    return Err(HomcError::InconsistentRelation(format!(
                        "{a} <-> {b} and {b} <-> {c} but not {a} <-> {c}"
                    )));
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 1..=n {
        if assigned[i - 1] {
            continue;
        }
        let class: Vec<usize> = (i..=n).filter(|&j| reach.communicate(i, j)).collect();
        class.iter().for_each(|&j| assigned[j - 1] = true);
        classes.push(class);
    }
    Ok(classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateClass {
    /// `p[i, i, tail] = 1` for every tail; always recurrent too.
    Absorbing,
    /// `f[i, i, tail] = 1` for every tail.
    Recurrent,
    /// `f[i, i, tail] < 1` for some tails and `= 1` for others.
    Transient,
    /// `f[i, i, tail] < 1` for every tail.
    FullyTransient,
    /// The truncated series cannot separate `f` from 1.
    Undecided,
}

impl StateClass {
    pub fn is_recurrent(self) -> bool {
        matches!(self, StateClass::Absorbing | StateClass::Recurrent)
    }

    pub fn is_transient(self) -> bool {
        matches!(self, StateClass::Transient | StateClass::FullyTransient)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// Label of state `i` at position `i - 1`.
    pub labels: Vec<StateClass>,
    pub reachability: Reachability,
    pub classes: Vec<Vec<usize>>,
    /// `f[i, i, tail]` for each state, tails in linear order.
    pub return_probabilities: Vec<Vec<f64>>,
}

impl ClassificationReport {
    pub fn label(&self, state: usize) -> StateClass {
        self.labels[state - 1]
    }
}

pub fn classify_states(p: &StochasticTensor, f: &PassageReport) -> Result<ClassificationReport> {
    let reach = reachability(p, f)?;
    let classes = communication_classes(&reach)?;
    let n = p.dim();
    let tails = history_tails(p.shape());
    let mut labels = Vec::with_capacity(n);
    let mut return_probabilities = Vec::with_capacity(n);
    for i in 1..=n {
        let indices: Vec<Vec<usize>> = tails
            .iter()
            .map(|tail| {
                let mut ix = vec![i, i];
                ix.extend(tail);
                ix
            })
            .collect();
        let values: Vec<f64> = indices.iter().map(|ix| f.get(ix)).collect();
        let ones = values
            .iter()
            .filter(|v| 1.0 - **v <= EQUALS_ONE_TOL)
            .count();
        // below one is only trustworthy once the series has converged
        let below = if f.converged() {
            values.len() - ones
        } else {
            0
        };
        let undecided = values.len() - ones - below;
        let absorbing = indices.iter().all(|ix| p.get(ix) >= 1.0 - 1e-12);
        let label = if absorbing {
            StateClass::Absorbing
        } else if ones == values.len() {
            StateClass::Recurrent
        } else if below == values.len() {
            StateClass::FullyTransient
        } else if ones > 0 && below > 0 {
            StateClass::Transient
        } else {
            debug_assert!(undecided > 0);
            StateClass::Undecided
        };
        labels.push(label);
        return_probabilities.push(values);
    }
    Ok(ClassificationReport {
        labels,
        reachability: reach,
        classes,
        return_probabilities,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClassConsistency {
    Consistent,
    /// A class holding both a recurrent and a fully transient state. This
    /// cannot happen for a correct computation.
    Violated {
        class: Vec<usize>,
        recurrent: usize,
        fully_transient: usize,
    },
}

/// No communication class may hold a recurrent and a fully transient state.
pub fn verify_class_consistency(report: &ClassificationReport) -> ClassConsistency {
    for class in &report.classes {
        let recurrent = class.iter().find(|&&s| report.label(s).is_recurrent());
        let fully = class
            .iter()
            .find(|&&s| report.label(s) == StateClass::FullyTransient);
        if let (Some(&r), Some(&t)) = (recurrent, fully) {
            return ClassConsistency::Violated {
                class: class.clone(),
                recurrent: r,
                fully_transient: t,
            };
        }
    }
    ClassConsistency::Consistent
}
