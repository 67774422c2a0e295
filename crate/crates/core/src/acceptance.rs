//! Executable acceptance criteria for the built-in example chains.
//!
//! Each criterion bundles a list of named checks. The CLI prints them for
//! `examples run`, and the `acceptance` integration test asserts them.

use std::fmt;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::error::HomcError;
use crate::fixtures;
use crate::limiting::{
    limit_via_powers, limiting_distribution, stationary_basis, stationary_distribution,
    StationaryDistribution, StationaryMethod,
};
use crate::mfpt::{mfpt_reduced, solve_mfpt};
use crate::passage::{
    ever_reaching, kstep, return_sums, PassageOptions, PassageReport, ReturnTrend,
};
use crate::reduction::{recover_kstep_from_reduced, reduce_chain};
use crate::simulate::{occupancy, passage_estimates, DEFAULT_MFPT_HORIZON};
use crate::structure::{
    analyze, classify_states, is_ergodic, is_irreducible, regularity_index,
    verify_class_consistency, ClassConsistency, Ergodicity, StateClass, DEFAULT_ORBIT_HORIZON,
};
use crate::tensor::{tuple_at, validate_stochastic, StochasticTensor, Tensor, TensorShape};

/// One pass/fail observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn failed(label: impl Into<String>, err: HomcError) -> Self {
        Self::new(label, false, format!("error: {err}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub criterion: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        write!(
            f,
            "[{verdict}] criterion {}: {} ({} checks, {failed} failed)",
            self.criterion,
            self.title,
            self.checks.len()
        )
    }
}

/// Sample sizes for the Monte Carlo criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub samples: u64,
    pub seeds: u64,
    /// Allowed standard errors between estimate and analytic value.
    pub z: f64,
    /// Fraction of comparisons that must agree.
    pub pass_budget: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seeds: 20,
            z: 4.0,
            pass_budget: 0.99,
        }
    }
}

/// Fixtures exercised by each criterion.
pub fn criteria_for_fixture(name: &str) -> &'static [usize] {
    match name {
        "s4_irreducible_not_ergodic" => &[1],
        "s4_regular_reducible" => &[2],
        "s4_four_state" => &[3],
        "s5_no_recurrent" => &[4],
        "s5_two_state" => &[5],
        "s5_mixed_class" => &[6],
        "s6_uniform" => &[7],
        _ => &[],
    }
}

pub fn run_criterion(criterion: usize, mc: &MonteCarloConfig) -> Option<Outcome> {
    Some(match criterion {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(mc),
        _ => return None,
    })
}

pub fn run_all(mc: &MonteCarloConfig) -> Vec<Outcome> {
    (1..=10).filter_map(|c| run_criterion(c, mc)).collect()
}

fn passage(p: &StochasticTensor) -> Result<PassageReport, HomcError> {
    ever_reaching(p, &PassageOptions::default())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Frontal slices of two tensors side by side.
pub fn compare_slices(computed: &Tensor, expected: &Tensor) -> String {
    let n = computed.dim();
    let mut out = String::new();
    for (s, (c, e)) in computed
        .as_slice()
        .chunks(n * n)
        .zip(expected.as_slice().chunks(n * n))
        .enumerate()
    {
        out.push_str(&format!("  slice {}:\n", s + 1));
        for i in 0..n {
            let row = |data: &[f64]| {
                (0..n)
                    .map(|j| format!("{:.6}", data[i + n * j]))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            out.push_str(&format!(
                "    computed [{}]   expected [{}]\n",
                row(c),
                row(e)
            ));
        }
    }
    out
}

fn f_matches(label: &str, p: &StochasticTensor, expected: &Tensor) -> Check {
    match passage(p) {
        Ok(f) => {
            let diff = f.ever.max_abs_diff(expected).unwrap_or(f64::INFINITY);
            Check::new(
                label,
                diff <= 1e-9,
                format!(
                    "max |F - printed| = {diff:e}\n{}",
                    compare_slices(&f.ever, expected)
                ),
            )
        }
        Err(e) => Check::failed(label, e),
    }
}

fn criterion_1() -> Outcome {
    let p = fixtures::irreducible_not_ergodic();
    let mut checks = Vec::new();
    match analyze(&p, DEFAULT_ORBIT_HORIZON) {
        Ok(a) => {
            checks.push(Check::new(
                "irreducible",
                a.irreducibility.irreducible,
                format!("{:?}", a.irreducibility),
            ));
            match &a.ergodicity {
                Ergodicity::NotErgodic { witness } => {
                    checks.push(Check::new(
                        "not ergodic",
                        true,
                        format!("witness {witness:?}"),
                    ));
                    let positive: Vec<usize> = (1..=64)
                        .filter(|&k| {
                            kstep(&p, k)
                                .map(|pk| pk.get(witness) != 0.0)
                                .unwrap_or(true)
                        })
                        .collect();
                    checks.push(Check::new(
                        "witness is zero in every power",
                        positive.is_empty(),
                        format!("p^(k) at {witness:?} for k = 1..64, nonzero at {positive:?}"),
                    ));
                }
                other => checks.push(Check::new("not ergodic", false, format!("{other:?}"))),
            }
            checks.push(Check::new(
                "regularity absent",
                a.regularity.index.is_none() && a.regularity.decided,
                format!("{:?}", a.regularity),
            ));
        }
        Err(e) => checks.push(Check::failed("analyze", e)),
    }
    Outcome {
        criterion: 1,
        title: "irreducible chain that is not ergodic",
        checks,
    }
}

fn criterion_2() -> Outcome {
    let p = fixtures::regular_reducible_reduction();
    let mut checks = Vec::new();
    let reg = regularity_index(&p, DEFAULT_ORBIT_HORIZON);
    checks.push(Check::new(
        "regularity index 2",
        reg.index == Some(2),
        format!("{reg:?}"),
    ));
    match reduce_chain(&p) {
        Ok(q) => {
            // multi-index 31 sits at linear position 3
            let row = q.matrix().row(2);
            checks.push(Check::new(
                "row 31 of the reduced chain is zero",
                q.label(3) == "31" && row.iter().all(|v| *v == 0.0),
                format!("row {} = {:?}", q.label(3), row.iter().collect::<Vec<_>>()),
            ));
            checks.push(Check::new(
                "reduced chain is reducible",
                !q.is_irreducible(),
                format!("strong components {:?}", q.strong_components()),
            ));
        }
        Err(e) => checks.push(Check::failed("reduce", e)),
    }
    Outcome {
        criterion: 2,
        title: "regular chain with a reducible reduced chain",
        checks,
    }
}

fn criterion_3() -> Outcome {
    let p = fixtures::four_state();
    let expected = fixtures::four_state_limit();
    let mut checks = Vec::new();
    let reg = regularity_index(&p, DEFAULT_ORBIT_HORIZON);
    checks.push(Check::new(
        "regularity index at most 10",
        reg.index.is_some_and(|k| k <= 10),
        format!("{reg:?}"),
    ));
    match passage(&p) {
        Ok(f) => {
            let worst = f
                .ever
                .as_slice()
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "F is all ones",
                worst <= 1e-9,
                format!("max |F - 1| = {worst:e}"),
            ));
        }
        Err(e) => checks.push(Check::failed("F is all ones", e)),
    }
    let q = match reduce_chain(&p) {
        Ok(q) => q,
        Err(e) => {
            checks.push(Check::failed("reduce", e));
            return Outcome {
                criterion: 3,
                title: "four-state regular chain",
                checks,
            };
        }
    };
    let z = StationaryDistribution::from_vector(&q, fixtures::four_state_stationary_z());
    let mut limits: Vec<(String, Vec<f64>)> = Vec::new();
    match &z {
        Ok(z) => {
            checks.push(Check::new(
                "published z is stationary",
                z.residual <= 1e-10,
                format!("residual {:e}", z.residual),
            ));
            if let Ok(l) = limiting_distribution(&p, z) {
                let d = max_diff(&l.pi, &expected);
                checks.push(Check::new(
                    "pi from z",
                    d <= 1e-9,
                    format!("{} (max diff {d:e})", fmt_vec(&l.pi)),
                ));
                limits.push(("z".into(), l.pi));
            }
        }
        Err(e) => checks.push(Check::failed("published z is stationary", e.clone())),
    }
    match limit_via_powers(&p, 1e-10, 100_000) {
        Ok(pl) => {
            let d = max_diff(&pl.distribution.pi, &expected);
            checks.push(Check::new(
                "pi from powers",
                d <= 1e-8,
                format!(
                    "{} after {} steps (max diff {d:e})",
                    fmt_vec(&pl.distribution.pi),
                    pl.steps
                ),
            ));
        }
        Err(e) => checks.push(Check::failed("pi from powers", e)),
    }
    let mut stationary = Vec::new();
    if let Ok(c) = stationary_distribution(&q, StationaryMethod::Cesaro) {
        stationary.push(("cesaro".to_string(), c));
    }
    if let Ok(basis) = stationary_basis(&q) {
        for (i, b) in basis.into_iter().enumerate() {
            stationary.push((format!("basis {}", i + 1), b));
        }
    }
    let distinct = stationary
        .iter()
        .filter(|(_, s)| max_diff(&s.xi, &fixtures::four_state_stationary_z()) > 1e-6)
        .count();
    for (name, s) in &stationary {
        if let Ok(l) = limiting_distribution(&p, s) {
            limits.push((name.clone(), l.pi));
        }
    }
    let spread = limits
        .iter()
        .map(|(_, pi)| max_diff(pi, &expected))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "pi invariant across distinct stationary vectors",
        distinct >= 1 && limits.len() >= 3 && spread <= 1e-8,
        format!(
            "{} stationary vectors ({distinct} differ from z), max diff from expected {spread:e}",
            limits.len()
        ),
    ));
    Outcome {
        criterion: 3,
        title: "four-state regular chain",
        checks,
    }
}

/// Older history `(i3, ..., im)` of every column, in linear order.
fn older_histories(p: &StochasticTensor) -> Vec<Vec<usize>> {
    let len = p.order() - 2;
    (1..=p.dim().pow(len as u32))
        .filter_map(|l| tuple_at(l, len, p.dim()).ok())
        .collect()
}

fn criterion_4() -> Outcome {
    let p = fixtures::no_recurrent();
    let mut checks = vec![f_matches(
        "F matches printed slices",
        &p,
        &fixtures::no_recurrent_ever_reaching(),
    )];
    match passage(&p).and_then(|f| classify_states(&p, &f)) {
        Ok(report) => checks.push(Check::new(
            "no recurrent state",
            report.labels.iter().all(|l| !l.is_recurrent()),
            format!("{:?}", report.labels),
        )),
        Err(e) => checks.push(Check::failed("no recurrent state", e)),
    }
    for (state, want) in [(1, ReturnTrend::Diverging), (3, ReturnTrend::Converging)] {
        for tail in older_histories(&p) {
            let label = format!("return sums at ({state},{state},{tail:?}) {want:?}");
            match return_sums(&p, state, &tail, 200) {
                Ok(r) => checks.push(Check::new(
                    label,
                    r.trend == want,
                    format!(
                        "S_200 = {:.6}, last increment {:e}",
                        r.partial[199], r.increments[199]
                    ),
                )),
                Err(e) => checks.push(Check::failed(label, e)),
            }
        }
    }
    Outcome {
        criterion: 4,
        title: "chain without recurrent states",
        checks,
    }
}

fn criterion_5() -> Outcome {
    let p = fixtures::two_state();
    let mut checks = vec![f_matches(
        "F matches printed slices",
        &p,
        &fixtures::two_state_ever_reaching(),
    )];
    match passage(&p).and_then(|f| classify_states(&p, &f)) {
        Ok(report) => {
            checks.push(Check::new(
                "both states recurrent",
                report.labels.iter().all(|l| l.is_recurrent()),
                format!("{:?}", report.labels),
            ));
            let r = &report.reachability;
            checks.push(Check::new(
                "2 reaches 1, 1 does not reach 2",
                r.reaches(2, 1) && !r.reaches(1, 2),
                format!("2->1 {}, 1->2 {}", r.reaches(2, 1), r.reaches(1, 2)),
            ));
        }
        Err(e) => checks.push(Check::failed("classify", e)),
    }
    let mut nonzero = Vec::new();
    let mut pk = p.tensor().clone();
    for k in 1..=50 {
        if k > 1 {
            pk = pk.boxtimes(&p).expect("same shape");
        }
        if pk.get(&[2, 1, 1]) != 0.0 {
            nonzero.push(k);
        }
    }
    checks.push(Check::new(
        "p^(k)(2,1,1) = 0 for k = 1..50",
        nonzero.is_empty(),
        format!("nonzero at {nonzero:?}"),
    ));
    Outcome {
        criterion: 5,
        title: "two recurrent states with one-way reachability",
        checks,
    }
}

fn criterion_6() -> Outcome {
    let p = fixtures::mixed_class();
    let mut checks = vec![f_matches(
        "F matches printed slices",
        &p,
        &fixtures::mixed_class_ever_reaching(),
    )];
    match passage(&p).and_then(|f| classify_states(&p, &f)) {
        Ok(report) => {
            checks.push(Check::new(
                "state 1 transient but not fully",
                report.label(1) == StateClass::Transient,
                format!("{:?}", report.label(1)),
            ));
            checks.push(Check::new(
                "state 3 recurrent",
                report.label(3).is_recurrent(),
                format!("{:?}", report.label(3)),
            ));
            checks.push(Check::new(
                "1 and 3 share a class",
                report
                    .classes
                    .iter()
                    .any(|c| c.contains(&1) && c.contains(&3)),
                format!("classes {:?}", report.classes),
            ));
            let consistency = verify_class_consistency(&report);
            checks.push(Check::new(
                "class consistency",
                consistency == ClassConsistency::Consistent,
                format!("{consistency:?}"),
            ));
        }
        Err(e) => checks.push(Check::failed("classify", e)),
    }
    Outcome {
        criterion: 6,
        title: "transient and recurrent states in one class",
        checks,
    }
}

fn criterion_7() -> Outcome {
    let p = fixtures::uniform();
    let mut checks = Vec::new();
    match solve_mfpt(&p) {
        Ok(sol) => {
            let worst = sol
                .mu
                .as_slice()
                .iter()
                .map(|v| (v - 3.0).abs())
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "mu is 3 everywhere",
                worst <= 1e-9,
                format!("max |mu - 3| = {worst:e}"),
            ));
        }
        Err(e) => checks.push(Check::failed("mu is 3 everywhere", e)),
    }
    match reduce_chain(&p).and_then(|q| mfpt_reduced(&q)) {
        Ok(sol) => {
            let diff = (&sol.m - fixtures::uniform_reduced_mfpt()).amax();
            checks.push(Check::new(
                "reduced M matches printed matrix",
                diff <= 1e-9,
                format!("max diff {diff:e}"),
            ));
            let spots = [((0, 0), 9.0), ((1, 0), 6.0), ((0, 1), 12.0)];
            let ok = spots
                .iter()
                .all(|&((r, c), v)| (sol.m[(r, c)] - v).abs() <= 1e-9);
            checks.push(Check::new(
                "M11 = 9, M21 = 6, M12 = 12",
                ok,
                format!(
                    "{:.9} {:.9} {:.9}",
                    sol.m[(0, 0)],
                    sol.m[(1, 0)],
                    sol.m[(0, 1)]
                ),
            ));
        }
        Err(e) => checks.push(Check::failed("reduced M", e)),
    }
    Outcome {
        criterion: 7,
        title: "uniform chain mean first passage times",
        checks,
    }
}

fn random_chain(order: usize, dim: usize, density: f64, seed: u64) -> StochasticTensor {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let shape = TensorShape::new(order, dim).expect("small shape");
    StochasticTensor::random(shape, density, &mut rng)
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for s in 0..20u64 {
        let n = 2 + (s % 2) as usize;
        let p = random_chain(4, n, 0.6, 8_000 + s);
        for k in 2..=6 {
            match recover_kstep_from_reduced(&p, k) {
                Ok(r) => worst = worst.max(r.max_abs_diff(&p.power(k)).unwrap_or(f64::INFINITY)),
                Err(e) => errors.push(format!("chain {s} k {k}: {e}")),
            }
        }
    }
    Outcome {
        criterion: 8,
        title: "k-step tensors recovered from powers of the reduced chain",
        checks: vec![Check::new(
            "20 random third-order chains, k = 2..6",
            errors.is_empty() && worst <= 1e-12,
            format!("max diff {worst:e}; errors {errors:?}"),
        )],
    }
}

/// Chains used by the structural property checks: the fixtures plus seeded
/// random chains of varying sparsity.
fn structural_sample() -> Vec<(String, StochasticTensor)> {
    let mut chains: Vec<(String, StochasticTensor)> = fixtures::registry()
        .into_iter()
        .map(|f| (f.name.to_string(), f.chain))
        .collect();
    for s in 0..30u64 {
        let n = 2 + (s % 3) as usize;
        let density = [0.25, 0.4, 0.7][(s / 3 % 3) as usize];
        chains.push((
            format!("random {s}"),
            random_chain(3, n, density, 9_000 + s),
        ));
    }
    chains
}

fn criterion_9() -> Outcome {
    let mut checks = Vec::new();

    let mut closure_fail = 0;
    for s in 0..50u64 {
        let a = random_chain(3, 3, 0.5, 100 + s);
        let b = random_chain(3, 3, 0.5, 200 + s);
        let c = a.boxtimes(&b).expect("same shape");
        if !validate_stochastic(&c, 1e-12).is_stochastic() {
            closure_fail += 1;
        }
    }
    checks.push(Check::new(
        "product of stochastic tensors is stochastic",
        closure_fail == 0,
        format!("{closure_fail}/50 failures"),
    ));

    let mut worst = 0.0f64;
    for s in 0..100u64 {
        let order = 2 + (s % 3) as usize;
        let a = random_chain(order, 2 + (s % 2) as usize, 0.6, 300 + s);
        let i = Tensor::identity(a.shape());
        worst = worst.max(
            i.boxtimes(&a)
                .and_then(|c| c.max_abs_diff(&a))
                .unwrap_or(f64::INFINITY),
        );
    }
    checks.push(Check::new(
        "I ⊠ A = A",
        worst == 0.0,
        format!("100 chains, max diff {worst:e}"),
    ));

    let a = fixtures::two_state();
    let right = a
        .boxtimes(&Tensor::identity(a.shape()))
        .and_then(|c| c.max_abs_diff(&a))
        .unwrap_or(0.0);
    checks.push(Check::new(
        "A ⊠ I ≠ A (two-state chain)",
        right > 1e-6,
        format!("max diff {right:e}"),
    ));
    let p = fixtures::four_state();
    let left = p
        .boxtimes(&p)
        .and_then(|pp| pp.boxtimes(&p))
        .expect("same shape");
    let right_assoc = p
        .boxtimes(&p.boxtimes(&p).expect("same shape"))
        .expect("same shape");
    let gap = left.max_abs_diff(&right_assoc).unwrap_or(0.0);
    checks.push(Check::new(
        "⊠ is not associative (four-state chain)",
        gap > 1e-6,
        format!("max diff {gap:e}"),
    ));

    let sample = structural_sample();
    let mut ergodic_not_irreducible = Vec::new();
    let mut regular_not_ergodic = Vec::new();
    let mut f_mismatch = Vec::new();
    let mut absorbing_not_recurrent = Vec::new();
    let mut mfpt_mismatch = Vec::new();
    for (name, p) in &sample {
        let erg = is_ergodic(p, DEFAULT_ORBIT_HORIZON);
        let irr = is_irreducible(p).map(|r| r.irreducible).unwrap_or(false);
        if erg.is_ergodic() && !irr {
            ergodic_not_irreducible.push(name.clone());
        }
        if regularity_index(p, DEFAULT_ORBIT_HORIZON).is_regular() && !erg.is_ergodic() {
            regular_not_ergodic.push(name.clone());
        }
        if let Ok(f) = passage(p) {
            let all_positive = f.ever.as_slice().iter().all(|v| *v > 0.0);
            if all_positive != erg.is_ergodic() {
                f_mismatch.push(name.clone());
            }
            if let Ok(report) = classify_states(p, &f) {
                for (i, label) in report.labels.iter().enumerate() {
                    let returns = &report.return_probabilities[i];
                    if *label == StateClass::Absorbing
                        && !(label.is_recurrent()
                            && returns.iter().all(|v| (1.0 - v).abs() <= 1e-9))
                    {
                        absorbing_not_recurrent.push(format!("{name} state {}", i + 1));
                    }
                }
            }
        } else {
            f_mismatch.push(format!("{name} (series error)"));
        }
    }
    for f in fixtures::registry() {
        let erg = is_ergodic(&f.chain, DEFAULT_ORBIT_HORIZON).is_ergodic();
        let raised = matches!(solve_mfpt(&f.chain), Err(HomcError::NonErgodicChain(_)));
        if raised == erg {
            mfpt_mismatch.push(f.name.to_string());
        }
    }
    let absorbing_seen = sample
        .iter()
        .filter_map(|(_, p)| passage(p).ok().and_then(|f| classify_states(p, &f).ok()))
        .flat_map(|r| r.labels)
        .filter(|l| *l == StateClass::Absorbing)
        .count();
    let n = sample.len();
    checks.push(Check::new(
        "ergodic implies irreducible",
        ergodic_not_irreducible.is_empty(),
        format!("{n} chains, violations {ergodic_not_irreducible:?}"),
    ));
    checks.push(Check::new(
        "regular implies ergodic",
        regular_not_ergodic.is_empty(),
        format!("{n} chains, violations {regular_not_ergodic:?}"),
    ));
    checks.push(Check::new(
        "ergodic iff every F entry positive",
        f_mismatch.is_empty(),
        format!("{n} chains, violations {f_mismatch:?}"),
    ));
    checks.push(Check::new(
        "absorbing implies recurrent",
        absorbing_not_recurrent.is_empty() && absorbing_seen > 0,
        format!("{absorbing_seen} absorbing states seen, violations {absorbing_not_recurrent:?}"),
    ));
    checks.push(Check::new(
        "mean first passage solve fails exactly on non-ergodic fixtures",
        mfpt_mismatch.is_empty(),
        format!("mismatches {mfpt_mismatch:?}"),
    ));

    let mut disagreements = Vec::new();
    for s in 0..50u64 {
        let n = 2 + (s % 5) as usize;
        let p = random_chain(2, n, 0.3, 500 + s);
        let irr = is_irreducible(&p).map(|r| r.irreducible).unwrap_or(false);
        if irr != is_ergodic(&p, DEFAULT_ORBIT_HORIZON).is_ergodic() {
            disagreements.push(s);
        }
    }
    checks.push(Check::new(
        "first-order irreducible iff ergodic",
        disagreements.is_empty(),
        format!("50 random matrices, disagreements {disagreements:?}"),
    ));

    Outcome {
        criterion: 9,
        title: "structural laws",
        checks,
    }
}

/// Fixtures on which the Monte Carlo oracle is compared.
pub fn ergodic_fixtures() -> Vec<fixtures::Fixture> {
    fixtures::registry()
        .into_iter()
        .filter(|f| is_ergodic(&f.chain, DEFAULT_ORBIT_HORIZON).is_ergodic())
        .collect()
}

/// Agreement counts of one fixture's analytic values with simulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleTally {
    pub comparisons: usize,
    pub agreements: usize,
    pub worst_z: f64,
}

impl OracleTally {
    fn record(&mut self, mean: f64, se: f64, exact: f64, z: f64) {
        self.comparisons += 1;
        let diff = (mean - exact).abs();
        // a zero standard error needs an exact match up to rounding
        if diff <= z * se + 1e-9 {
            self.agreements += 1;
        }
        if diff > 1e-9 {
            self.worst_z = self.worst_z.max(diff / se);
        }
    }
}

/// Compare `μ`, `F` and `π` of an ergodic chain with simulation under one
/// seed. Occupancy is sampled after the number of steps at which `P^k`
/// agrees with `π ⊗ e ⊗ ... ⊗ e` to 1e-10, so the estimate targets `π`
/// itself.
pub fn oracle_compare(
    p: &StochasticTensor,
    seed: u64,
    mc: &MonteCarloConfig,
) -> Result<OracleTally, HomcError> {
    let mu = solve_mfpt(p)?.mu;
    let f = passage(p)?.ever;
    let limit = limit_via_powers(p, 1e-10, 100_000)?;
    let q = reduce_chain(p)?;
    let pi = limiting_distribution(p, &stationary_distribution(&q, StationaryMethod::Cesaro)?)?.pi;
    let mut tally = OracleTally::default();
    for (h, tail) in p.shape().tails().enumerate() {
        let est = passage_estimates(
            p,
            &tail,
            DEFAULT_MFPT_HORIZON,
            mc.samples,
            seed ^ ((h as u64) << 32),
        )?;
        for i in 0..p.dim() {
            let mut index = vec![i + 1];
            index.extend(&tail);
            let e = est.ever[i];
            tally.record(e.mean, e.std_error, f.get(&index), mc.z);
            let m = est.mfpt[i];
            tally.record(m.mean, m.std_error, mu.get(&index), mc.z);
        }
    }
    for (i, e) in occupancy(p, limit.steps, mc.samples, seed)?
        .iter()
        .enumerate()
    {
        tally.record(e.mean, e.std_error, pi[i], mc.z);
    }
    Ok(tally)
}

fn criterion_10(mc: &MonteCarloConfig) -> Outcome {
    let mut checks = Vec::new();
    for fixture in ergodic_fixtures() {
        let mut total = OracleTally::default();
        let mut error = None;
        for seed in 0..mc.seeds {
            match oracle_compare(&fixture.chain, 0xC0FFEE + seed, mc) {
                Ok(t) => {
                    total.comparisons += t.comparisons;
                    total.agreements += t.agreements;
                    total.worst_z = total.worst_z.max(t.worst_z);
                }
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }
        let check = match error {
            Some(e) => Check::failed(fixture.name, e),
            None => {
                let rate = total.agreements as f64 / total.comparisons.max(1) as f64;
                Check::new(
                    fixture.name,
                    total.comparisons > 0 && rate >= mc.pass_budget,
                    format!(
                        "{}/{} comparisons within {} standard errors over {} seeds of {} samples; worst |z| {:.2}",
                        total.agreements, total.comparisons, mc.z, mc.seeds, mc.samples, total.worst_z
                    ),
                )
            }
        };
        checks.push(check);
    }
    if checks.is_empty() {
        checks.push(Check::new("ergodic fixtures", false, "none found"));
    }
    Outcome {
        criterion: 10,
        title: "simulation agrees with mu, F and pi",
        checks,
    }
}
