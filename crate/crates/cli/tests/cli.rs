//! End-to-end tests of the `frlab` binary: exit codes, report shape,
//! and byte-identical replays.

use std::path::PathBuf;
use std::process::{Command, Output};

fn frlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn fixture(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("frlab-test-{name}"));
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn es_report_golden_digits() {
    let out = frlab(&["es-report", "--digits", "1,1,1,1,1,1", "--levels", "4"]);
    let v = stdout_json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let q: Vec<i64> = rows.iter().map(|r| r["q_n"].as_i64().unwrap()).collect();
    assert_eq!(q, vec![1, 1, 2, 3, 5]);
    assert!((rows[2]["beta"].as_f64().unwrap() - 0.2).abs() < 1e-15);
    assert!((rows[2]["kappa"].as_f64().unwrap() - 0.30901699437494734).abs() < 1e-12);
    // Bounds strictly decrease level to level.
    let bounds: Vec<f64> = rows
        .iter()
        .map(|r| r["propinquity_bound"].as_f64().unwrap())
        .collect();
    assert!(bounds.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn es_report_csv_has_table_header() {
    let out = frlab(&["es-report", "--digits", "2,2,2,2", "--levels", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,q_n,q_prev,t,beta,kappa,propinquity_bound"
    );
    // sqrt(2) - 1 convergents: q = 1, 2, 5, 12.
    let q: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(q, vec!["1", "2", "5", "12"]);
}

#[test]
fn rational_theta_trips_the_numeric_guard() {
    let out = frlab(&["es-report", "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rational"), "{err}");
}

#[test]
fn uhf_bound_matches_the_geometric_series() {
    let out = frlab(&["bound", "--ladder", "uhf", "--period", "1", "--level", "2"]);
    let v = stdout_json(&out);
    // 4 * sum_{j >= 2} 4^{-j} = 1/3.
    assert!((v["bound"]["total"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn verify_passes_and_corrupt_kappa_fails() {
    let out = frlab(&["verify", "leibniz", "--trials", "80", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes"], true);
    assert_eq!(v["config"]["trials"], 80);

    let out = frlab(&["verify", "leibniz", "--trials", "80", "--seed", "5", "--corrupt-kappa"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes"], false);
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = frlab(&["verify", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kantorovich_two_point_fixture() {
    let path = fixture(
        "two-point.json",
        r#"{"type": "commutative", "metric": [[0.0, 1.0], [1.0, 0.0]], "mu": [1.0, 0.0], "nu": [0.0, 1.0]}"#,
    );
    let out = frlab(&["kantorovich", path.to_str().unwrap()]);
    let v = stdout_json(&out);
    assert!((v["oracle"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["gap"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn kantorovich_parse_error_is_a_usage_error() {
    let path = fixture("broken.json", r#"{"type": "commutative""#);
    let out = frlab(&["kantorovich", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sharp_kappa_dominates_the_explicit_constant() {
    let out = frlab(&[
        "sharp-kappa", "--digits", "1,1,1,1,1,1,1,1", "--level", "2",
        "--starts", "4", "--iters", "60",
    ]);
    let v = stdout_json(&out);
    let explicit = v["explicit_kappa"].as_f64().unwrap();
    let estimate = v["sharp_estimate"].as_f64().unwrap();
    assert!((explicit - 0.30901699437494734).abs() < 1e-9);
    assert!(estimate >= explicit - 1e-6);
}

#[test]
fn replays_are_byte_identical() {
    let args = ["verify", "restriction", "--trials", "40", "--seed", "13"];
    let a = frlab(&args);
    let b = frlab(&args);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}
