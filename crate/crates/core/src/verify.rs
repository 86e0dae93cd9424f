//! Named verification suites over the standard ladders.
//!
//! Each suite builds its own fixtures (Effros-Shen ladders at the golden
//! conjugate and at sqrt(2) - 1, a UHF ladder with all multiplicities 1),
//! runs seeded property checks, and returns a [`CheckReport`]. Checks
//! that test an inequality with its own constant record the *excess*
//! beyond that constant, so a uniform small tolerance applies to every
//! suite.

use crate::algebra::Element;
use crate::error::{Error, Result};
use crate::ladder::{BaireSequence, EsLadder, UhfLadder, GOLDEN_CONJUGATE};
use crate::metric::{approximation_witness, theta_continuity_experiment, uhf_locality_check};
use crate::report::{CheckReport, PropertyCheck};
use crate::sample::{random_self_adjoint, trial_rng};
use crate::seminorm::{
    check_quasi_leibniz, check_strongly_leibniz, sharp_constant_estimate, tunnel_seminorm,
    BlockSelection, FrNorm, LeibnizParams,
};
use crate::trace::{
    composition_identity_check, conditional_expectation, expectation_weight_gap,
    intertwining_check, schwarz_check, verify_tomiyama, TraceState,
};

pub const SQRT2_MINUS_1: f64 = 0.414213562373095049;

/// Names accepted by [`run_suite`], in the order they are usually run.
pub const SUITE_NAMES: &[&str] = &[
    "tomiyama",
    "leibniz",
    "strong-leibniz",
    "approximation",
    "intertwining",
    "restriction",
    "equivalence",
    "continuity",
    "uhf-locality",
    "tunnel",
];

/// Shared knobs for every suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub trials: u64,
    pub seed: u64,
    pub tolerance: f64,
    /// Halve the first rung constant on the left-hand seminorm of the
    /// Leibniz suites; the suites are then expected to fail.
    pub corrupt_kappa: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            trials: 200,
            seed: 7,
            tolerance: 1e-10,
            corrupt_kappa: false,
        }
    }
}

/// Dispatch by suite name.
pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<CheckReport> {
    match name {
        "tomiyama" => suite_tomiyama(opts),
        "leibniz" => suite_leibniz(opts),
        "strong-leibniz" => suite_strong_leibniz(opts),
        "approximation" => suite_approximation(opts),
        "intertwining" => suite_intertwining(opts),
        "restriction" => suite_restriction(opts),
        "equivalence" => suite_equivalence(opts),
        "continuity" => suite_continuity(opts),
        "uhf-locality" => suite_uhf_locality(opts),
        "tunnel" => suite_tunnel(opts),
        other => Err(Error::Invalid(format!(
            "unknown suite {other:?}; expected one of {SUITE_NAMES:?}"
        ))),
    }
}

fn standard_uhf(top: usize) -> Result<UhfLadder> {
    UhfLadder::new(BaireSequence::constant(1)?, top)
}

/// Tomiyama properties of every tau-preserving expectation onto a lower
/// level, on three standard ladders, plus Schwarz positivity of the top
/// step expectations.
pub fn suite_tomiyama(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("tomiyama", opts.tolerance);
    let golden = EsLadder::new(GOLDEN_CONJUGATE, 4)?;
    let silver = EsLadder::new(SQRT2_MINUS_1, 2)?;
    let uhf = standard_uhf(4)?;
    let mut run = |label: &str, e: crate::trace::ConditionalExpectation| -> Result<()> {
        for check in verify_tomiyama(&e, opts.trials, opts.seed)? {
            report.push(PropertyCheck::new(
                format!("{label}/{}", check.property),
                check.trials,
                check.max_violation,
                check.seed,
            ));
        }
        Ok(())
    };
    for m in 0..golden.top() {
        run(&format!("golden-E{m}"), golden.expectation(m, golden.top())?)?;
    }
    for m in 0..silver.top() {
        run(&format!("silver-E{m}"), silver.expectation(m, silver.top())?)?;
    }
    for m in 0..uhf.top() {
        run(&format!("uhf-E{m}"), uhf.expectation(m, uhf.top())?)?;
    }
    let schwarz = schwarz_check(
        &golden.expectation(golden.top() - 1, golden.top())?,
        opts.trials,
        opts.seed,
    )?;
    report.push(PropertyCheck::new(
        "golden-step/schwarz",
        schwarz.trials,
        schwarz.max_violation,
        schwarz.seed,
    ));
    Ok(report)
}

/// Quasi-Leibniz (A, B) = (1, 0) on the ladder seminorms at the golden
/// conjugate, levels 1..=3.
pub fn suite_leibniz(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("leibniz", opts.tolerance);
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    for n in 1..=3usize {
        let l = ladder.seminorm(n)?;
        let lhs = if opts.corrupt_kappa {
            l.with_scaled_kappa(0, 0.5)
        } else {
            l.clone()
        };
        let shape = ladder.level(n).shape.clone();
        let r = check_quasi_leibniz(
            &shape,
            &|a| lhs.evaluate(a),
            &|a| l.evaluate(a),
            LeibnizParams::leibniz(),
            opts.trials,
            opts.seed,
        )?;
        report.push(PropertyCheck::new(
            format!("golden-L{n}/quasi-leibniz"),
            r.check.trials,
            r.check.max_violation,
            r.check.seed,
        ));
    }
    Ok(report)
}

/// Strongly Leibniz C = 1 on the same seminorms.
pub fn suite_strong_leibniz(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("strong-leibniz", opts.tolerance);
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    for n in 1..=3usize {
        let l = ladder.seminorm(n)?;
        let lhs = if opts.corrupt_kappa {
            l.with_scaled_kappa(0, 0.5)
        } else {
            l.clone()
        };
        let shape = ladder.level(n).shape.clone();
        let r = check_strongly_leibniz(
            &shape,
            &|a| lhs.evaluate(a),
            &|a| l.evaluate(a),
            1.0,
            opts.trials,
            opts.seed,
        )?;
        report.push(PropertyCheck::new(
            format!("golden-L{n}/strongly-leibniz"),
            r.check.trials,
            r.check.max_violation,
            r.check.seed,
        ));
    }
    Ok(report)
}

/// Finite-level approximation property: for L_{n+1}(a) <= 1 the step
/// witness b = E_n(a) satisfies ||a - alpha(b)|| <= beta(n) and
/// L_n(b) <= 1. Violations record the excess over those bounds.
pub fn suite_approximation(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("approximation", opts.tolerance);
    let golden = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    for n in 0..golden.top() {
        let alpha = &golden.level(n).alpha;
        let step = golden.step_expectation(n)?;
        let l_here = golden.seminorm(n)?;
        let l_next = golden.seminorm(n + 1)?;
        let shape = golden.level(n + 1).shape.clone();
        let beta = golden.level(n).beta;
        let mut defect_excess = 0.0_f64;
        let mut slack_excess = 0.0_f64;
        for t in 0..opts.trials {
            let mut rng = trial_rng(opts.seed, t);
            let a = random_self_adjoint(&shape, &mut rng);
            let norm = l_next.evaluate(&a)?;
            if norm < 1e-9 {
                continue;
            }
            let a = a.scale((1.0 / norm).into());
            let w = approximation_witness(alpha, &step, &|b| l_here.evaluate(b), &a)?;
            defect_excess = defect_excess.max(w.defect - beta);
            slack_excess = slack_excess.max(w.seminorm_slack);
        }
        report.push(PropertyCheck::new(
            format!("golden-level{}/defect-within-beta", n + 1),
            opts.trials,
            defect_excess.max(0.0),
            opts.seed,
        ));
        report.push(PropertyCheck::new(
            format!("golden-level{}/witness-seminorm", n + 1),
            opts.trials,
            slack_excess.max(0.0),
            opts.seed,
        ));
    }
    let uhf = standard_uhf(3)?;
    for n in 0..uhf.top() {
        let alpha = &uhf.level(n).mu;
        let step = uhf.expectation(n, n + 1)?;
        let l_here = uhf.seminorm(n)?;
        let l_next = uhf.seminorm(n + 1)?;
        let shape = uhf.level(n + 1).shape.clone();
        let gamma = uhf.level(n).gamma;
        let mut defect_excess = 0.0_f64;
        let mut slack_excess = 0.0_f64;
        for t in 0..opts.trials {
            let mut rng = trial_rng(opts.seed, t);
            let a = random_self_adjoint(&shape, &mut rng);
            let norm = l_next.evaluate(&a)?;
            if norm < 1e-9 {
                continue;
            }
            let a = a.scale((1.0 / norm).into());
            let w = approximation_witness(alpha, &step, &|b| l_here.evaluate(b), &a)?;
            defect_excess = defect_excess.max(w.defect - gamma);
            slack_excess = slack_excess.max(w.seminorm_slack);
        }
        report.push(PropertyCheck::new(
            format!("uhf-level{}/defect-within-gamma", n + 1),
            opts.trials,
            defect_excess.max(0.0),
            opts.seed,
        ));
        report.push(PropertyCheck::new(
            format!("uhf-level{}/witness-seminorm", n + 1),
            opts.trials,
            slack_excess.max(0.0),
            opts.seed,
        ));
    }
    Ok(report)
}

/// Intertwining of step and ambient expectations along both ladders.
pub fn suite_intertwining(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("intertwining", opts.tolerance);
    let golden = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    for n in 0..golden.top() - 1 {
        let check = intertwining_check(
            &golden.expectation(n, golden.top())?,
            &golden.step_expectation(n)?,
            &golden.embed(n + 1, golden.top())?,
            opts.trials,
            opts.seed,
        )?;
        report.push(PropertyCheck::new(
            format!("golden-n{n}/{}", check.property),
            check.trials,
            check.max_violation,
            check.seed,
        ));
    }
    let uhf = standard_uhf(3)?;
    for n in 0..uhf.top() - 1 {
        let check = intertwining_check(
            &uhf.expectation(n, uhf.top())?,
            &uhf.expectation(n, n + 1)?,
            &uhf.embed(n + 1, uhf.top())?,
            opts.trials,
            opts.seed,
        )?;
        report.push(PropertyCheck::new(
            format!("uhf-n{n}/{}", check.property),
            check.trials,
            check.max_violation,
            check.seed,
        ));
    }
    Ok(report)
}

/// Restriction equality L_{n+1}(alpha_n(a)) = L_n(a) and the tower
/// identity E_m o E_n = E_m through level 3 at the golden conjugate.
pub fn suite_restriction(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("restriction", opts.tolerance);
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    for n in 0..ladder.top() {
        let l_here = ladder.seminorm(n)?;
        let l_next = ladder.seminorm(n + 1)?;
        let alpha = &ladder.level(n).alpha;
        let shape = ladder.level(n).shape.clone();
        let mut worst = 0.0_f64;
        for t in 0..opts.trials {
            let mut rng = trial_rng(opts.seed, t);
            let a = random_self_adjoint(&shape, &mut rng);
            let gap = (l_next.evaluate(&alpha.apply(&a)?)? - l_here.evaluate(&a)?).abs();
            worst = worst.max(gap);
        }
        report.push(PropertyCheck::new(
            format!("golden-level{n}/restriction-equality"),
            opts.trials,
            worst,
            opts.seed,
        ));
    }
    for m in 0..ladder.top() {
        for n in m + 1..ladder.top() {
            let check = composition_identity_check(
                &ladder.expectation(m, ladder.top())?,
                &ladder.expectation(n, ladder.top())?,
                opts.trials,
                opts.seed,
            )?;
            report.push(PropertyCheck::new(
                format!("golden-E{m}-E{n}/{}", check.property),
                check.trials,
                check.max_violation,
                check.seed,
            ));
        }
    }
    Ok(report)
}

/// Norm equivalence: the explicit rung constants bound the
/// Frobenius-Rieffel step norm from below, the sharp estimates dominate
/// them, and the sharp estimates are continuous in the trace weights.
pub fn suite_equivalence(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("equivalence", opts.tolerance);
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 4)?;
    for n in 0..ladder.top() {
        let kappa = ladder.level(n).kappa;
        let fr = FrNorm::new(ladder.step_expectation(n)?);
        let shape = ladder.level(n + 1).shape.clone();
        let mut excess = 0.0_f64;
        for t in 0..opts.trials {
            let mut rng = trial_rng(opts.seed, t);
            let a = crate::sample::random_element(&shape, &mut rng);
            excess = excess.max(kappa * a.operator_norm() - fr.value(&a)?);
        }
        report.push(PropertyCheck::new(
            format!("golden-n{n}/kappa-lower-bound"),
            opts.trials,
            excess.max(0.0),
            opts.seed,
        ));
    }
    // The explicit constant is the sharp one, so any feasible-point
    // estimate must sit above it (up to optimizer arithmetic).
    for n in [2usize, 3] {
        let estimate = ladder.sharp_kappa_estimate(n, 8, 120, opts.seed)?;
        let excess = ladder.level(n).kappa - estimate - 1e-6;
        report.push(PropertyCheck::new(
            format!("golden-n{n}/explicit-below-sharp-estimate"),
            (8 * 120) as u64,
            excess.max(0.0),
            opts.seed,
        ));
    }
    // Continuity of the sharp estimate in the trace weights.
    let alpha = ladder.embed(2, 3)?;
    let shape3 = ladder.level(3).shape.clone();
    let t3 = ladder.level(3).t;
    let run_estimate = |weights: Vec<f64>| -> Result<f64> {
        let tau = TraceState::new(shape3.clone(), weights)?;
        let e = conditional_expectation(&alpha, &tau)?;
        let fr = FrNorm::new(e);
        sharp_constant_estimate(
            &shape3,
            &|a| fr.value(a),
            &|a| Ok(a.operator_norm()),
            6,
            80,
            opts.seed,
        )
    };
    let delta = 5e-7;
    let base = run_estimate(vec![t3, 1.0 - t3])?;
    let perturbed = run_estimate(vec![t3 + delta, 1.0 - t3 - delta])?;
    let excess = (base - perturbed).abs() - 1e-4;
    report.push(PropertyCheck::new(
        "golden-n2/sharp-estimate-weight-continuity",
        (6 * 80) as u64,
        excess.max(0.0),
        opts.seed,
    ));
    Ok(report)
}

/// Continuity in the parameter: the seminorm gap at a fixed level
/// shrinks strictly as the digit mismatch moves out, and the expectation
/// gap shrinks with the trace-weight perturbation.
pub fn suite_continuity(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("continuity", opts.tolerance);
    let digits = BaireSequence::constant(1)?;
    let level = 2;
    let ks = [level + 1, level + 2, level + 4];
    let mut discrepancies = Vec::new();
    for &k in &ks {
        let r = theta_continuity_experiment(&digits, k, level, opts.trials, opts.seed)?;
        discrepancies.push(r.discrepancy);
        report.push(PropertyCheck::new(
            format!("golden-k{k}/levels-agree"),
            opts.trials,
            if r.shapes_match { 0.0 } else { 1.0 },
            opts.seed,
        ));
    }
    for w in discrepancies.windows(2) {
        report.push(PropertyCheck::new(
            format!("discrepancy-decreases/{:.3e}-vs-{:.3e}", w[0], w[1]),
            opts.trials,
            if w[1] < w[0] { 0.0 } else { 1.0 },
            opts.seed,
        ));
    }
    // Expectation gap under shrinking trace-weight perturbations.
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 3)?;
    let alpha = ladder.embed(2, 3)?;
    let shape3 = ladder.level(3).shape.clone();
    let t3 = ladder.level(3).t;
    let tau = TraceState::new(shape3.clone(), vec![t3, 1.0 - t3])?;
    let mut gaps = Vec::new();
    for delta in [1e-2, 1e-4, 1e-6] {
        let tau_p = TraceState::new(shape3.clone(), vec![t3 + delta, 1.0 - t3 - delta])?;
        gaps.push(expectation_weight_gap(
            &alpha, &tau, &tau_p, opts.trials, opts.seed,
        )?);
    }
    for w in gaps.windows(2) {
        report.push(PropertyCheck::new(
            format!("weight-gap-decreases/{:.3e}-vs-{:.3e}", w[0], w[1]),
            opts.trials,
            if w[1] < w[0] { 0.0 } else { 1.0 },
            opts.seed,
        ));
    }
    Ok(report)
}

/// Locality of the UHF construction in the Baire metric: levels below
/// the agreement horizon must match exactly, and the check must refuse
/// to claim anything once the horizon is crossed.
pub fn suite_uhf_locality(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("uhf-locality", opts.tolerance);
    let ones = BaireSequence::constant(1)?;
    let far = BaireSequence::new(vec![1, 1, 1, 1, 1], vec![2])?;
    let near = BaireSequence::new(vec![1, 1], vec![3])?;
    let budget = crate::ladder::DEFAULT_DIM_BUDGET;
    let r = uhf_locality_check(&ones, &far, 4, budget, 4, 60, opts.seed)?;
    report.push(PropertyCheck::new(
        "mismatch-at-5/n4-exact-equality",
        opts.trials,
        if r.applicable && r.all_equal { 0.0 } else { 1.0 },
        opts.seed,
    ));
    let r = uhf_locality_check(&ones, &near, 3, budget, 4, 60, opts.seed)?;
    report.push(PropertyCheck::new(
        "mismatch-at-2/n3-not-applicable",
        opts.trials,
        if r.applicable { 1.0 } else { 0.0 },
        opts.seed,
    ));
    let r = uhf_locality_check(&ones, &near, 1, budget, 4, 60, opts.seed)?;
    report.push(PropertyCheck::new(
        "mismatch-at-2/n1-exact-equality",
        opts.trials,
        if r.applicable && r.all_equal { 0.0 } else { 1.0 },
        opts.seed,
    ));
    Ok(report)
}

/// The tunnel seminorm with identity quotients passes the Leibniz and
/// C = 1 strong-Leibniz suites on the pair algebra.
pub fn suite_tunnel(opts: &SuiteOptions) -> Result<CheckReport> {
    let mut report = CheckReport::new("tunnel", opts.tolerance);
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 2)?;
    let l = ladder.seminorm(2)?;
    let shape = ladder.level(2).shape.clone();
    let pi = BlockSelection::identity(&shape);
    let eps = ladder.level(2).beta;
    let pair = crate::seminorm::pair_shape(&shape, &shape);
    let l_a = |x: &Element| l.evaluate(x);
    let l_b = |x: &Element| l.evaluate(x);
    let tunnel = {
        let shape = shape.clone();
        let pi = pi.clone();
        move |x: &Element| -> Result<f64> {
            let (a, b) = crate::seminorm::split_pair(&shape, &shape, x)?;
            tunnel_seminorm(&l_a, &l_b, &pi, &pi, eps, &a, &b)
        }
    };
    let r = check_quasi_leibniz(
        &pair,
        &tunnel,
        &tunnel,
        LeibnizParams::leibniz(),
        opts.trials,
        opts.seed,
    )?;
    report.push(PropertyCheck::new(
        "identity-quotients/quasi-leibniz",
        r.check.trials,
        r.check.max_violation,
        r.check.seed,
    ));
    let r = check_strongly_leibniz(&pair, &tunnel, &tunnel, 1.0, opts.trials, opts.seed)?;
    report.push(PropertyCheck::new(
        "identity-quotients/strongly-leibniz",
        r.check.trials,
        r.check.max_violation,
        r.check.seed,
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(trials: u64) -> SuiteOptions {
        SuiteOptions {
            trials,
            ..SuiteOptions::default()
        }
    }

    #[test]
    fn every_named_suite_passes() {
        for name in SUITE_NAMES {
            let report = run_suite(name, &opts(40)).unwrap();
            assert!(
                report.passes(),
                "suite {name} failed: {:?}",
                report.failures()
            );
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("no-such-suite", &opts(5)).is_err());
    }

    #[test]
    fn corrupted_kappa_fails_the_leibniz_suites() {
        let o = SuiteOptions {
            trials: 150,
            corrupt_kappa: true,
            ..SuiteOptions::default()
        };
        assert!(!suite_leibniz(&o).unwrap().passes());
        assert!(!suite_strong_leibniz(&o).unwrap().passes());
    }
}
