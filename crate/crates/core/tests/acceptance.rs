//! Acceptance gate: ten headline checks, one pass/fail line each
//! (visible with `cargo test --test acceptance -- --nocapture`).
//! Closed-form quantities are reproduced exactly; everything asymptotic
//! is checked as seeded finite-level properties with pinned tolerances
//! and runtime budgets.

use std::time::{Duration, Instant};

use frlab_core::ladder::{BaireSequence, EsLadder, UhfLadder, GOLDEN_CONJUGATE};
use frlab_core::metric::{
    es_propinquity_bound, kantorovich_distance, kantorovich_lp_oracle, theta_continuity_experiment,
    uhf_locality_check, uhf_propinquity_bound, KantorovichBudget, State,
};
use frlab_core::trace::TraceState;
use frlab_core::verify::{
    suite_approximation, suite_equivalence, suite_leibniz, suite_restriction,
    suite_strong_leibniz, suite_tomiyama, suite_tunnel, SuiteOptions,
};
use frlab_core::AlgebraShape;

const SEED: u64 = 42;

fn gate(number: usize, name: &str, ok: bool) {
    println!(
        "criterion {number:02} {name}: {}",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {number:02} {name} failed");
}

fn within(start: Instant, budget: Duration) -> bool {
    let elapsed = start.elapsed();
    if elapsed > budget {
        eprintln!("runtime {elapsed:?} exceeded budget {budget:?}");
    }
    elapsed <= budget
}

fn opts(trials: u64) -> SuiteOptions {
    SuiteOptions {
        trials,
        seed: SEED,
        tolerance: 1e-10,
        corrupt_kappa: false,
    }
}

#[test]
fn criterion_01_closed_form_data() {
    let start = Instant::now();
    let ladder = EsLadder::new(GOLDEN_CONJUGATE, 5).unwrap();
    let q: Vec<i64> = (0..=5).map(|n| ladder.convergents().q(n)).collect();
    let mut ok = q == vec![1, 1, 2, 3, 5, 8];
    let betas = [0.5, 0.2, 1.0 / 13.0, 1.0 / 34.0, 1.0 / 89.0];
    for (n, b) in betas.iter().enumerate() {
        ok &= (ladder.level(n + 1).beta - b).abs() < 1e-15;
    }
    ok &= (ladder.level(1).t - GOLDEN_CONJUGATE).abs() < 1e-12;
    ok &= (ladder.level(2).t - 2.0 * (1.0 - GOLDEN_CONJUGATE)).abs() < 1e-12;
    ok &= (ladder.level(2).kappa - 0.30902).abs() < 1e-5;
    ok &= within(start, Duration::from_secs(1));
    gate(1, "closed-form-data", ok);
}

#[test]
fn criterion_02_tomiyama_suite() {
    let start = Instant::now();
    let report = suite_tomiyama(&opts(500)).unwrap();
    let ok = report.passes() && within(start, Duration::from_secs(30));
    if !report.passes() {
        eprintln!("failures: {:?}", report.failures());
    }
    gate(2, "tomiyama-500-trials", ok);
}

#[test]
fn criterion_03_leibniz_suites_with_negative_control() {
    let start = Instant::now();
    let honest = opts(500);
    let mut ok = suite_leibniz(&honest).unwrap().passes();
    ok &= suite_strong_leibniz(&honest).unwrap().passes();
    let corrupt = SuiteOptions {
        trials: 200,
        corrupt_kappa: true,
        ..honest
    };
    ok &= !suite_leibniz(&corrupt).unwrap().passes();
    ok &= within(start, Duration::from_secs(60));
    gate(3, "leibniz-and-strongly-leibniz", ok);
}

#[test]
fn criterion_04_approximation_property() {
    let start = Instant::now();
    let report = suite_approximation(&opts(500)).unwrap();
    let ok = report.passes() && within(start, Duration::from_secs(30));
    if !report.passes() {
        eprintln!("failures: {:?}", report.failures());
    }
    gate(4, "approximation-witnesses", ok);
}

#[test]
fn criterion_05_restriction_and_tower_identity() {
    let report = suite_restriction(&opts(500)).unwrap();
    if !report.passes() {
        eprintln!("failures: {:?}", report.failures());
    }
    gate(5, "restriction-and-composition", report.passes());
}

#[test]
fn criterion_06_norm_equivalence() {
    let report = suite_equivalence(&opts(500)).unwrap();
    if !report.passes() {
        eprintln!("failures: {:?}", report.failures());
    }
    gate(6, "norm-equivalence", report.passes());
}

#[test]
fn criterion_07_kantorovich_oracle_agreement() {
    let start = Instant::now();
    let line = |positions: &[f64]| -> Vec<Vec<f64>> {
        positions
            .iter()
            .map(|&x| positions.iter().map(|&y| (x - y).abs()).collect())
            .collect()
    };
    // (metric, mu, nu) commutative fixtures with up to 6 points.
    let fixtures: Vec<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> = vec![
        (line(&[0.0, 1.0]), vec![1.0, 0.0], vec![0.0, 1.0]),
        (
            line(&[0.0, 1.0, 2.0]),
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ),
        (
            line(&[0.0, 1.0, 2.0]),
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
        ),
        (
            line(&[0.0, 0.5, 1.3, 2.0]),
            vec![0.4, 0.1, 0.3, 0.2],
            vec![0.1, 0.2, 0.3, 0.4],
        ),
        (
            line(&[0.0, 0.3, 0.6, 0.9, 1.2, 1.5]),
            vec![0.5, 0.1, 0.1, 0.1, 0.1, 0.1],
            vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.5],
        ),
    ];
    let mut ok = true;
    for (i, (metric, mu, nu)) in fixtures.iter().enumerate() {
        let n = metric.len();
        let shape = AlgebraShape::new(vec![1; n]).unwrap();
        let tau = TraceState::new(shape.clone(), vec![1.0 / n as f64; n]).unwrap();
        let phi = State::mixture(&shape, mu).unwrap();
        let psi = State::mixture(&shape, nu).unwrap();
        let l = frlab_core::metric::commutative_lipschitz(metric.clone());
        let result =
            kantorovich_distance(&l, &tau, &phi, &psi, KantorovichBudget::default(), SEED)
                .unwrap();
        let oracle = kantorovich_lp_oracle(metric, mu, nu).unwrap();
        let gap = (result.value - oracle).abs();
        if gap > 1e-4 {
            eprintln!("fixture {i}: solver {} vs oracle {oracle}", result.value);
            ok = false;
        }
        if i == 0 && (oracle - 1.0).abs() > 1e-12 {
            ok = false;
        }
    }
    ok &= within(start, Duration::from_secs(20));
    gate(7, "kantorovich-oracle-agreement", ok);
}

#[test]
fn criterion_08_propinquity_bounds() {
    let golden = BaireSequence::constant(1).unwrap();
    let mut ok = true;
    let mut previous = f64::INFINITY;
    for n in 0..=6 {
        let bound = es_propinquity_bound(&golden, n).unwrap().report();
        ok &= bound.tail_bound < 1e-12 * bound.total;
        ok &= bound.total < previous;
        previous = bound.total;
    }
    for n in 0..=4 {
        let bound = uhf_propinquity_bound(&golden, n).unwrap().report();
        let closed_form = (16.0 / 3.0) * 0.25_f64.powi(n as i32);
        ok &= ((bound.total - closed_form) / closed_form).abs() < 1e-12;
    }
    gate(8, "certified-propinquity-bounds", ok);
}

#[test]
fn criterion_09_continuity_and_locality() {
    let golden = BaireSequence::constant(1).unwrap();
    let level = 2;
    let mut ok = true;
    let mut previous = f64::INFINITY;
    for k in [level + 1, level + 2, level + 4] {
        let r = theta_continuity_experiment(&golden, k, level, 200, SEED).unwrap();
        ok &= r.shapes_match && r.discrepancy < previous;
        previous = r.discrepancy;
    }
    // Exact equality through level n whenever the Baire distance is
    // below 2^-n; nothing claimed otherwise.
    let far = BaireSequence::new(vec![1, 1, 1, 1, 1], vec![2]).unwrap();
    let r = uhf_locality_check(&golden, &far, 4, 512, 4, 60, SEED).unwrap();
    ok &= r.applicable && r.all_equal;
    let near = BaireSequence::new(vec![1, 1], vec![3]).unwrap();
    let r = uhf_locality_check(&golden, &near, 3, 512, 4, 60, SEED).unwrap();
    ok &= !r.applicable;
    gate(9, "continuity-and-locality", ok);
}

#[test]
fn criterion_10_tunnel_seminorm() {
    let report = suite_tunnel(&opts(500)).unwrap();
    if !report.passes() {
        eprintln!("failures: {:?}", report.failures());
    }
    gate(10, "tunnel-strongly-leibniz", report.passes());
}

// Deterministic fixtures reused by the ladders above stay within the
// dimension budget; this guards the acceptance configuration itself.
#[test]
fn acceptance_fixtures_fit_the_budget() {
    let golden = EsLadder::new(GOLDEN_CONJUGATE, 4).unwrap();
    assert!(golden.level(4).shape.linear_dim() <= 64);
    let uhf = UhfLadder::new(BaireSequence::constant(1).unwrap(), 4).unwrap();
    assert_eq!(uhf.level(4).dim, 16);
}
