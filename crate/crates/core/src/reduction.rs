//! The reduced first-order chain on length-`(m-1)` histories.
//!
//! State `i1 i2 ... i(m-1)` of the reduced chain means "the last `m-1` states
//! were `i1` (current), `i2`, ..., `i(m-1)` (oldest)". Its transition matrix
//! `Q` is column-stochastic: column `j2 ... jm` holds the distribution of the
//! next history given the current one.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{HomcError, Result};
use crate::tensor::{check_guard, unravel, StochasticTensor, Tensor, DEFAULT_ENTRY_GUARD};

/// `Q` together with the history length and state count it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedChain {
    history_len: usize,
    dim: usize,
    q: DMatrix<f64>,
}

impl ReducedChain {
    /// Treat an arbitrary column-stochastic matrix as a first-order chain.
    pub fn from_matrix(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(HomcError::ShapeMismatch {
                expected: "non-empty square matrix".into(),
                found: format!("{}x{}", q.nrows(), q.ncols()),
            });
        }
        for (c, col) in q.column_iter().enumerate() {
            if let Some(r) = col.iter().position(|v| !(0.0..=1.0 + 1e-12).contains(v)) {
                return Err(HomcError::NotStochastic(format!(
                    "entry ({}, {}) = {} lies outside [0, 1]",
                    r + 1,
                    c + 1,
                    col[r]
                )));
            }
            let sum = col.sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(HomcError::NotStochastic(format!(
                    "column {} sums to {sum}",
                    c + 1
                )));
            }
        }
        Ok(Self {
            history_len: 1,
            dim: q.nrows(),
            q,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Number of reduced states `N = n^(m-1)`.
    pub fn size(&self) -> usize {
        self.q.nrows()
    }

    /// Length `m-1` of the histories labelling reduced states.
    pub fn history_len(&self) -> usize {
        self.history_len
    }

    /// Number of states `n` of the original chain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Multi-index label of a 1-based reduced state, e.g. `"12"`. Components
    /// are comma separated once `n` exceeds 9.
    pub fn label(&self, state: usize) -> String {
        let parts = unravel(state - 1, self.history_len, self.dim);
        let sep = if self.dim > 9 { "," } else { "" };
        parts
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.size()).map(|s| self.label(s)).collect()
    }

    fn digraph(&self) -> DiGraph<usize, ()> {
        let n = self.size();
        let mut g = DiGraph::with_capacity(n, n * self.dim);
        let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
        for c in 0..n {
            for r in 0..n {
                if self.q[(r, c)] > 0.0 {
                    g.add_edge(nodes[c], nodes[r], ());
                }
            }
        }
        g
    }

    /// Strongly connected components of the transition digraph, as sorted
    /// lists of 0-based states, ordered by smallest member.
    pub fn strong_components(&self) -> Vec<Vec<usize>> {
        let g = self.digraph();
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|ix| g[ix]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        comps.sort_unstable_by_key(|c| c[0]);
        comps
    }

    /// Components with no transition leaving them (the recurrent classes).
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        self.strong_components()
            .into_iter()
            .filter(|comp| {
                let mut inside = vec![false; n];
                comp.iter().for_each(|&s| inside[s] = true);
                comp.iter()
                    .all(|&c| (0..n).all(|r| self.q[(r, c)] == 0.0 || inside[r]))
            })
            .collect()
    }

    /// Irreducible as a first-order chain, i.e. one strong component.
    pub fn is_irreducible(&self) -> bool {
        self.strong_components().len() == 1
    }

    /// States reachable (in zero or more steps) from a 1-based state.
    pub fn reachable_from(&self, state: usize) -> Vec<bool> {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack = vec![state - 1];
        seen[state - 1] = true;
        while let Some(c) = stack.pop() {
            for (r, v) in self.q.column(c).iter().enumerate() {
                if *v > 0.0 && !seen[r] {
                    seen[r] = true;
                    stack.push(r);
                }
            }
        }
        seen
    }

    /// `Q^k` by repeated multiplication.
    pub fn matrix_power(&self, k: usize) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.size(), self.size());
        for _ in 0..k {
            acc = &acc * &self.q;
        }
        acc
    }
}

/// Build `Q` from a transition tensor. `p(i1, i2, ..., im)` goes to row
/// `i1 ... i(m-1)` and column `i2 ... im`; everything else is zero.
pub fn reduce_chain(p: &StochasticTensor) -> Result<ReducedChain> {
    let shape = p.shape();
    let n = shape.dim();
    let size = shape.tail_count();
    check_guard(
        "reduced matrix",
        (size as u128) * (size as u128),
        DEFAULT_ENTRY_GUARD,
    )?;
    let mut q = DMatrix::zeros(size, size);
    for (offset, &value) in p.as_slice().iter().enumerate() {
        // row drops the oldest index, column drops the newest
        q[(offset % size, offset / n)] = value;
    }
    Ok(ReducedChain {
        history_len: shape.order() - 1,
        dim: n,
        q,
    })
}

/// 1-based `(row, column)` of `p(t)` inside `Q`.
pub fn entry_locator(tuple: &[usize], dim: usize) -> Result<(usize, usize)> {
    if tuple.len() < 2 || tuple.iter().any(|&i| i == 0 || i > dim) {
        return Err(HomcError::OutOfRange {
            index: tuple.to_vec(),
            dim,
            len: tuple.len(),
        });
    }
    let m = tuple.len();
    let row = crate::tensor::linear_index(&tuple[..m - 1], dim)?;
    let col = crate::tensor::linear_index(&tuple[1..], dim)?;
    Ok((row, col))
}

/// Recover the `k`-step tensor of a third-order chain (order 4) from `Q^k`:
/// `p(2)[i1 i2 i3 i4] = Σ_{j1} q(2)[i1 j1 i2, i2 i3 i4]` and, for `k ≥ 3`,
/// `p(k)[i1 i2 i3 i4] = Σ_{j2} Σ_{j1} q(k)[i1 j1 j2, i2 i3 i4]`.
pub fn recover_kstep_from_reduced(p: &StochasticTensor, k: usize) -> Result<Tensor> {
    if p.order() != 4 {
        return Err(HomcError::WrongOrder {
            expected: 4,
            found: p.order(),
        });
    }
    if k < 2 {
        return Err(HomcError::InvalidArgument(format!(
            "step count must be at least 2, got {k}"
        )));
    }
    let n = p.dim();
    let reduced = reduce_chain(p)?;
    let qk = reduced.matrix_power(k);
    let state = |a: usize, b: usize, c: usize| a + n * b + n * n * c;
    Tensor::from_fn(p.shape(), |ix| {
        let (i1, i2, i3, i4) = (ix[0] - 1, ix[1] - 1, ix[2] - 1, ix[3] - 1);
        let col = state(i2, i3, i4);
        let mut sum = 0.0;
        for j1 in 0..n {
            if k == 2 {
                sum += qk[(state(i1, j1, i2), col)];
            } else {
                for j2 in 0..n {
                    sum += qk[(state(i1, j1, j2), col)];
                }
            }
        }
        sum
    })
}

/// `G^[k]` of a first-order chain: `G^[1] = Q`,
/// `G^[k+1] = (G^[k] - diag(G^[k])) Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageMatrix {
    pub g: DMatrix<f64>,
    pub step: usize,
}

pub fn reduced_first_passage(q: &ReducedChain, k: usize) -> Result<FirstPassageMatrix> {
    if k == 0 {
        return Err(HomcError::InvalidArgument(
            "first passage step count must be at least 1".into(),
        ));
    }
    let mut g = q.q.clone();
    for _ in 1..k {
        g.fill_diagonal(0.0);
        g = &g * &q.q;
    }
    Ok(FirstPassageMatrix { g, step: k })
}

/// `v` rounded to six significant digits with trailing zeros trimmed.
fn format_probability(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let decimals = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Graphviz rendering of the reduced transition digraph.
///
/// One node per reduced state and one edge per nonzero transition, both in
/// linear-index order, so the output is byte-stable for a given chain.
pub fn export_dot(q: &ReducedChain) -> String {
    let labels = q.labels();
    let mut out = String::from("digraph reduced_chain {\n");
    for l in &labels {
        let _ = writeln!(out, "  \"{l}\";");
    }
    for c in 0..q.size() {
        for r in 0..q.size() {
            let v = q.q[(r, c)];
            if v != 0.0 {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    labels[c],
                    labels[r],
                    format_probability(v)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::tensor::{StochasticTensor, TensorShape};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn locator_examples() {
        assert_eq!(entry_locator(&[1, 1, 1, 1], 2).unwrap(), (1, 1));
        assert_eq!(entry_locator(&[2, 2, 2, 2], 2).unwrap(), (8, 8));
        assert_eq!(entry_locator(&[1, 1, 1, 2], 2).unwrap(), (1, 5));
        assert_eq!(entry_locator(&[2, 1, 1, 2], 2).unwrap(), (2, 5));
        assert!(entry_locator(&[3, 1, 1, 1], 2).is_err());
    }

    #[test]
    fn symbolic_order_four_template() {
        // tag each entry with its own index digits
        let shape = TensorShape::new(4, 2).unwrap();
        let tagged = Tensor::from_fn(shape, |ix| {
            (ix[0] * 1000 + ix[1] * 100 + ix[2] * 10 + ix[3]) as f64
        })
        .unwrap();
        let q = reduce_chain(&StochasticTensor::from_trusted(tagged)).unwrap();
        #[rustfmt::skip]
        let template: [[u32; 8]; 8] = [
            [1111, 0, 0, 0, 1112, 0, 0, 0],
            [2111, 0, 0, 0, 2112, 0, 0, 0],
            [0, 1211, 0, 0, 0, 1212, 0, 0],
            [0, 2211, 0, 0, 0, 2212, 0, 0],
            [0, 0, 1121, 0, 0, 0, 1122, 0],
            [0, 0, 2121, 0, 0, 0, 2122, 0],
            [0, 0, 0, 1221, 0, 0, 0, 1222],
            [0, 0, 0, 2221, 0, 0, 0, 2222],
        ];
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(q.matrix()[(r, c)], template[r][c] as f64, "({r},{c})");
            }
        }
        assert_eq!(
            q.labels(),
            ["111", "211", "121", "221", "112", "212", "122", "222"]
        );
    }

    #[test]
    fn regular_chain_reduction_has_zero_row_31() {
        let q = reduce_chain(&fixtures::regular_reducible_reduction()).unwrap();
        let h = 0.5;
        let t = 1.0 / 3.0;
        #[rustfmt::skip]
        let printed = [
            [h, 0., 0., h, 0., 0., h, 0., 0.],
            [h, 0., 0., h, 0., 0., h, 0., 0.],
            [0., 0., 0., 0., 0., 0., 0., 0., 0.],
            [0., t, 0., 0., t, 0., 0., t, 0.],
            [0., t, 0., 0., t, 0., 0., t, 0.],
            [0., t, 0., 0., t, 0., 0., t, 0.],
            [0., 0., t, 0., 0., t, 0., 0., t],
            [0., 0., t, 0., 0., t, 0., 0., t],
            [0., 0., t, 0., 0., t, 0., 0., t],
        ];
        for r in 0..9 {
            for c in 0..9 {
                assert_eq!(q.matrix()[(r, c)], printed[r][c]);
            }
        }
        assert_eq!(q.label(3), "31");
        assert!(!q.is_irreducible());
    }

    #[test]
    fn first_order_reduction_is_identity_map() {
        let p = StochasticTensor::from_slices(2, &[vec![vec![0.2, 0.6], vec![0.8, 0.4]]]).unwrap();
        let q = reduce_chain(&p).unwrap();
        assert_eq!(q.matrix(), &p.mode1_matricize());
    }

    #[test]
    fn locator_agrees_with_reduction() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        for (m, n) in [(4, 2), (3, 4)] {
            let p = StochasticTensor::random(TensorShape::new(m, n).unwrap(), 1.0, &mut rng);
            let q = reduce_chain(&p).unwrap();
            for t in p.shape().tuples() {
                let (r, c) = entry_locator(&t, n).unwrap();
                assert_eq!(q.matrix()[(r - 1, c - 1)], p.get(&t));
            }
        }
    }

    #[test]
    fn structural_zero_law() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
        for (m, n) in [(3, 3), (4, 2)] {
            let p = StochasticTensor::random(TensorShape::new(m, n).unwrap(), 1.0, &mut rng);
            let q = reduce_chain(&p).unwrap();
            let len = m - 1;
            for r in 0..q.size() {
                for c in 0..q.size() {
                    let row = unravel(r, len, n);
                    let col = unravel(c, len, n);
                    // row i1..i(m-1), column j2..jm: need i_l == j_l for l = 2..m-1
                    let compatible = row[1..] == col[..len - 1];
                    if !compatible {
                        assert_eq!(q.matrix()[(r, c)], 0.0);
                    }
                }
            }
            for c in 0..q.size() {
                assert!((q.matrix().column(c).sum() - 1.0).abs() < 1e-12);
                assert!(q.matrix().column(c).iter().filter(|v| **v != 0.0).count() <= n);
            }
        }
    }

    #[test]
    fn recovery_matches_uniform_chain() {
        let p = StochasticTensor::new(
            Tensor::from_vec(TensorShape::new(4, 2).unwrap(), vec![0.5; 16]).unwrap(),
        )
        .unwrap();
        for k in 2..6 {
            let r = recover_kstep_from_reduced(&p, k).unwrap();
            assert!(r.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn recovery_matches_tensor_power() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(31);
        let p = StochasticTensor::random(TensorShape::new(4, 2).unwrap(), 1.0, &mut rng);
        for k in [2, 5] {
            let recovered = recover_kstep_from_reduced(&p, k).unwrap();
            assert!(recovered.max_abs_diff(&p.power(k)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn recovery_rejects_wrong_order() {
        assert!(matches!(
            recover_kstep_from_reduced(&fixtures::uniform(), 2),
            Err(HomcError::WrongOrder {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn first_passage_base_and_absorbing() {
        let q = ReducedChain::from_matrix(DMatrix::identity(2, 2)).unwrap();
        assert_eq!(
            reduced_first_passage(&q, 1).unwrap().g,
            DMatrix::identity(2, 2)
        );
        assert_eq!(
            reduced_first_passage(&q, 2).unwrap().g,
            DMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn two_step_first_passage_formula() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        let p = StochasticTensor::random(TensorShape::new(4, 2).unwrap(), 1.0, &mut rng);
        let q = reduce_chain(&p).unwrap();
        let g2 = reduced_first_passage(&q, 2).unwrap().g;
        let mut checked = 0;
        for i in p.shape().tails() {
            for j in p.shape().tails() {
                let (i1, i2, i3) = (i[0], i[1], i[2]);
                let (j1, j2, j3) = (j[0], j[1], j[2]);
                if j1 == i3 && (i1 != i2 || i2 != i3 || i3 != j2) {
                    let r = crate::tensor::linear_index(&i, 2).unwrap() - 1;
                    let c = crate::tensor::linear_index(&j, 2).unwrap() - 1;
                    let expected = p.get(&[i1, i2, i3, j2]) * p.get(&[i2, i3, j2, j3]);
                    assert!((g2[(r, c)] - expected).abs() < 1e-15);
                    checked += 1;
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn dot_for_single_state_chain() {
        let q = ReducedChain::from_matrix(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(
            export_dot(&q),
            "digraph reduced_chain {\n  \"1\";\n  \"1\" -> \"1\" [label=\"1\"];\n}\n"
        );
    }

    #[test]
    fn dot_for_four_state_chain() {
        let q = reduce_chain(&fixtures::four_state()).unwrap();
        let dot = export_dot(&q);
        assert_eq!(
            dot.lines()
                .filter(|l| l.ends_with("\";") && !l.contains("->"))
                .count(),
            16
        );
        assert_eq!(dot, export_dot(&q));
        // 12 cannot reach 11 in the reduced chain
        let from_12 = q.reachable_from(crate::tensor::linear_index(&[1, 2], 4).unwrap());
        assert!(!from_12[0]);
    }

    #[test]
    fn dot_node_31_has_no_incoming_edges() {
        let q = reduce_chain(&fixtures::regular_reducible_reduction()).unwrap();
        let dot = export_dot(&q);
        assert!(!dot.lines().any(|l| l.contains("-> \"31\"")));
        assert!(dot.contains("\"11\" -> \"11\" [label=\"0.5\"]"));
        assert!(dot.contains("[label=\"0.333333\"]"));
    }

    #[test]
    fn probability_formatting() {
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(0.5), "0.5");
        assert_eq!(format_probability(1.0 / 3.0), "0.333333");
        assert_eq!(format_probability(0.0123456789), "0.0123457");
    }
}
