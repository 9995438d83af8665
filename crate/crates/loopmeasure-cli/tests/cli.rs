use std::path::Path;
use std::process::{Command, Output};

use loopmeasure::birkhoff::{BirkhoffFactors, FactorsJson};
use loopmeasure::harness::experiment::Report;
use loopmeasure::random::{rand_factors, rng_from_seed};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopmeasure")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON record")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&run(&["verify", "--suite", "lemma38", "--bogus"])), 2);
    assert_eq!(code(&run(&["nosuch"])), 2);
    assert_eq!(code(&run(&["verify", "--suite", "lemma99"])), 2);
}

#[test]
fn sample_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let args = ["sample", "--target", "su2", "--beta", "1", "--steps", "64", "--loops", "2", "--out", path_str(&out)];
    assert_eq!(code(&run(&args)), 2);
}

#[test]
fn diag72_passes() {
    let out = run(&["special", "--check", "diag72"]);
    assert_eq!(code(&out), 0);
    let record = stdout_json(&out);
    assert_eq!(record["check"], "diag72");
    assert!(record["abs_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn verify_reports_and_fails_on_impossible_tolerance() {
    let ok = run(&["verify", "--suite", "lemma38", "--trials", "20", "--seed", "7", "--tol", "1e-9"]);
    assert_eq!(code(&ok), 0);
    let record = stdout_json(&ok);
    assert!(record["max_error"].as_f64().unwrap() < 1e-9);
    assert!(record["failures"].as_array().unwrap().is_empty());

    let bad = run(&["verify", "--suite", "lemma52", "--trials", "2", "--seed", "7", "--tol", "1e-30"]);
    assert_eq!(code(&bad), 1);
    assert!(!stdout_json(&bad)["failures"].as_array().unwrap().is_empty());
}

#[test]
fn factorize_round_trips_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let (input, output) = (dir.path().join("loop.json"), dir.path().join("factors.json"));
    let (gm, g0, gp) = rand_factors::<f64, _>(2, 3, &mut rng_from_seed(5));
    let exact = BirkhoffFactors::from_parts(gm, g0, gp);
    std::fs::write(&input, serde_json::to_string(&exact.product().to_json()).unwrap()).unwrap();
    assert_eq!(code(&run(&["factorize", "--in", path_str(&input), "--out", path_str(&output)])), 0);
    let factors: FactorsJson = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert!(factors.residual < 1e-9);
    let g0 = &factors.g_zero.coeffs[0];
    let expected = exact.g_zero[(0, 0)];
    assert!((g0[0][0] - expected.re).abs() < 1e-9 && (g0[0][1] - expected.im).abs() < 1e-9);
}

#[test]
fn factorize_missing_input_is_a_usage_error() {
    assert_eq!(code(&run(&["factorize", "--in", "/nonexistent/loop.json", "--out", "/tmp/x.json"])), 2);
}

#[test]
fn sample_then_stats_is_deterministic_and_reconciles() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let args = [
            "sample",
            "--target",
            "s2",
            "--beta",
            "1",
            "--steps",
            "128",
            "--loops",
            "120",
            "--seed",
            "4",
            "--out",
            path_str(out),
        ];
        assert_eq!(code(&run(&args)), 0);
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(text.iter().filter(|&&c| c == b'\n').count(), 120);

    let report_path = dir.path().join("report.json");
    let stats =
        ["stats", "--in", path_str(&a), "--statistic", "B1p", "--reference", "EQ321", "--out", path_str(&report_path)];
    assert_eq!(code(&run(&stats)), 0);
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(report.reconciles());
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].n_loops, 120);

    // A band no sample can meet turns into an assertion failure.
    let mut strict = stats.to_vec();
    strict.extend(["--max-distance", "1e-6"]);
    assert_eq!(code(&run(&strict)), 1);

    let bad =
        ["stats", "--in", path_str(&a), "--statistic", "a0", "--reference", "EQ321", "--out", path_str(&report_path)];
    assert_eq!(code(&run(&bad)), 2);
}
