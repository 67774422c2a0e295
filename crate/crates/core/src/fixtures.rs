//! Worked example chains and their published reference values.
//!
//! Tensors are written as frontal slices `P(:, :, i3)`: rows are the next
//! state `i1`, columns the current state `i2`.

use nalgebra::DMatrix;

use crate::tensor::{StochasticTensor, Tensor};

const H: f64 = 1.0 / 2.0;
const T: f64 = 1.0 / 3.0;

fn slices(raw: &[&[&[f64]]]) -> Vec<Vec<Vec<f64>>> {
    raw.iter()
        .map(|s| s.iter().map(|r| r.to_vec()).collect())
        .collect()
}

fn chain(raw: &[&[&[f64]]]) -> StochasticTensor {
    StochasticTensor::from_slices(3, &slices(raw)).expect("fixture is stochastic")
}

fn tensor(raw: &[&[&[f64]]]) -> Tensor {
    Tensor::from_slices(3, &slices(raw)).expect("fixture shape")
}

/// Three-state second-order chain that is irreducible but not ergodic: state
/// 2 is never entered after the first step.
pub fn irreducible_not_ergodic() -> StochasticTensor {
    chain(&[
        &[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 1.]],
        &[&[0., 0., 0.], &[0., 0., 0.], &[1., 1., 1.]],
        &[&[0., 0., 1.], &[0., 0., 0.], &[1., 1., 0.]],
    ])
}

/// Regular three-state chain with `p(3|1,·) = 0`, whose reduced chain has an
/// all-zero row at multi-index 31.
pub fn regular_reducible_reduction() -> StochasticTensor {
    let s: &[&[f64]] = &[&[H, T, T], &[H, T, T], &[0., T, T]];
    chain(&[s, s, s])
}

/// Regular four-state second-order chain (`P^10 > 0`) whose reduced chain is
/// reducible with a two-dimensional stationary set.
pub fn four_state() -> StochasticTensor {
    chain(&[
        &[
            &[H, 0., 0., 0.],
            &[H, 0., 1., 0.],
            &[0., 1., 0., 1.],
            &[0., 0., 0., 0.],
        ],
        &[
            &[0., 0., H, 1.],
            &[0., H, 0., 0.],
            &[H, H, 0., 0.],
            &[H, 0., H, 0.],
        ],
        &[
            &[0., 1., 0., 1.],
            &[1., 0., H, 0.],
            &[0., 0., H, 0.],
            &[0., 0., 0., 0.],
        ],
        &[
            &[0., 0., 0., 0.],
            &[1., 1., 1., 0.],
            &[0., 0., 0., H],
            &[0., 0., 0., H],
        ],
    ])
}

/// A stationary vector of the reduced four-state chain (indices in
/// multi-index linear order `11, 21, 31, 41, 12, ...`).
pub fn four_state_stationary_z() -> Vec<f64> {
    [
        0., 0., 1., 1., 2., 0., 0., 0., 0., 2., 0., 0., 0., 0., 1., 0.,
    ]
    .iter()
    .map(|v| v / 7.0)
    .collect()
}

/// Limiting distribution of [`four_state`].
pub fn four_state_limit() -> Vec<f64> {
    vec![2.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]
}

/// Three-state chain in which no state is recurrent.
pub fn no_recurrent() -> StochasticTensor {
    chain(&[
        &[&[1., 0., 0.], &[0., H, H], &[0., H, H]],
        &[&[1., 0., H], &[0., 1., 0.], &[0., 0., H]],
        &[&[0., H, 1.], &[0., H, 0.], &[1., 0., 0.]],
    ])
}

pub fn no_recurrent_ever_reaching() -> Tensor {
    tensor(&[
        &[&[1., H, 0.75], &[0., 1., 1.], &[0., H, H]],
        &[&[1., 0., 1.], &[0., 1., 1.], &[0., 0., 1.]],
        &[&[0.75, H, 1.], &[1., H, 1.], &[1., 0., 1.]],
    ])
}

/// Two-state chain where both states are recurrent yet `1 -> 2` fails.
pub fn two_state() -> StochasticTensor {
    chain(&[&[&[1., H], &[0., H]], &[&[0., H], &[1., H]]])
}

pub fn two_state_ever_reaching() -> Tensor {
    tensor(&[&[&[1., 1.], &[0., 1.]], &[&[1., 1.], &[1., 1.]]])
}

/// Three-state chain where a transient state and a recurrent state share a
/// communication class.
///
/// The published first slice has column `(1/3, 1/2, 1/3)` at `i2 = 2`, which
/// sums to 7/6; `p(2|2,1) = 1/3` is the value that reproduces the published
/// ever-reaching tensor, and is used here.
pub fn mixed_class() -> StochasticTensor {
    chain(&[
        &[&[H, T, H], &[H, T, 0.], &[0., T, H]],
        &[&[1., 0., H], &[0., 1., H], &[0., 0., 0.]],
        &[&[0., 0., H], &[0., 0., H], &[1., 1., 0.]],
    ])
}

pub fn mixed_class_ever_reaching() -> Tensor {
    tensor(&[
        &[&[5. / 6., 2. / 3., 1.], &[1., 1., 1.], &[H, H, 1.]],
        &[&[1., 0., 1.], &[1., 1., 1.], &[H, 0., 1.]],
        &[&[1., 1., 1.], &[1., 1., 1.], &[1., 1., 1.]],
    ])
}

/// Second-order chain on three states with every transition probability 1/3.
pub fn uniform() -> StochasticTensor {
    let s: &[&[f64]] = &[&[T, T, T], &[T, T, T], &[T, T, T]];
    chain(&[s, s, s])
}

/// Mean first passage matrix of the reduced [`uniform`] chain.
pub fn uniform_reduced_mfpt() -> DMatrix<f64> {
    #[rustfmt::skip]
    let rows: [[f64; 9]; 9] = [
        [ 9., 12., 12.,  9., 12., 12.,  9., 12., 12.],
        [ 6.,  9.,  9.,  6.,  9.,  9.,  6.,  9.,  9.],
        [ 6.,  9.,  9.,  6.,  9.,  9.,  6.,  9.,  9.],
        [ 9.,  6.,  9.,  9.,  6.,  9.,  9.,  6.,  9.],
        [12.,  9., 12., 12.,  9., 12., 12.,  9., 12.],
        [ 9.,  6.,  9.,  9.,  6.,  9.,  9.,  6.,  9.],
        [ 9.,  9.,  6.,  9.,  9.,  6.,  9.,  9.,  6.],
        [ 9.,  9.,  6.,  9.,  9.,  6.,  9.,  9.,  6.],
        [12., 12.,  9., 12., 12.,  9., 12., 12.,  9.],
    ];
    DMatrix::from_fn(9, 9, |r, c| rows[r][c])
}

/// A named worked example.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub chain: StochasticTensor,
}

/// All built-in example chains, in a fixed order.
pub fn registry() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "s4_irreducible_not_ergodic",
            description: "three-state second-order chain, irreducible but not ergodic",
            chain: irreducible_not_ergodic(),
        },
        Fixture {
            name: "s4_regular_reducible",
            description: "regular three-state chain whose reduced chain is reducible",
            chain: regular_reducible_reduction(),
        },
        Fixture {
            name: "s4_four_state",
            description:
                "regular four-state chain; ever-reaching, stationary and limiting distributions",
            chain: four_state(),
        },
        Fixture {
            name: "s5_no_recurrent",
            description: "three-state chain with no recurrent state",
            chain: no_recurrent(),
        },
        Fixture {
            name: "s5_two_state",
            description: "two recurrent states with one-way reachability",
            chain: two_state(),
        },
        Fixture {
            name: "s5_mixed_class",
            description: "transient and recurrent states in one communication class",
            chain: mixed_class(),
        },
        Fixture {
            name: "s6_uniform",
            description: "uniform three-state chain; tensor vs reduced mean first passage times",
            chain: uniform(),
        },
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    registry().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{validate_stochastic, TensorShape};

    #[test]
    fn every_fixture_is_stochastic() {
        let reg = registry();
        assert_eq!(reg.len(), 7);
        for f in reg {
            assert!(
                validate_stochastic(&f.chain, 1e-12).is_stochastic(),
                "{}",
                f.name
            );
        }
    }

    #[test]
    fn published_mixed_class_slice_is_not_stochastic() {
        let published = Tensor::from_slices(
            3,
            &slices(&[
                &[&[H, T, H], &[H, H, 0.], &[0., T, H]],
                &[&[1., 0., H], &[0., 1., H], &[0., 0., 0.]],
                &[&[0., 0., H], &[0., 0., H], &[1., 1., 0.]],
            ]),
        )
        .unwrap();
        assert!(!validate_stochastic(&published, 1e-9).is_stochastic());
    }

    #[test]
    fn slice_orientation() {
        let p = four_state();
        assert_eq!(p.shape(), TensorShape::new(3, 4).unwrap());
        // P(:,:,2) row 1 = [0 0 1/2 1]
        assert_eq!(p.get(&[1, 3, 2]), 0.5);
        assert_eq!(p.get(&[1, 4, 2]), 1.0);
        assert_eq!(two_state().get(&[1, 1, 1]), 1.0);
        assert_eq!(two_state().get(&[2, 1, 1]), 0.0);
    }
}
