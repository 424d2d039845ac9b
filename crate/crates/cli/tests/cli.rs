use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use woet_core::io::{parse_csv, parse_report};
use woet_core::Status;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn woet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woet")).args(args).output().expect("spawn woet")
}

fn error_object(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr is empty");
    serde_json::from_str(line).expect("stderr holds a JSON error object")
}

#[test]
fn solve_prints_certified_report() {
    let out = woet(&["solve", problem("kl_point.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.status, Status::Optimal);
    let primal = report.primal_value.unwrap().0;
    assert!((primal - 1.0).abs() < 1e-6);
    assert!(report.gap.unwrap().0 <= 1e-6);
}

#[test]
fn out_and_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let out = woet(&[
        "solve",
        problem("ot_2x2.json").to_str().unwrap(),
        "--out",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report = parse_report(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let table = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let coupling = report.coupling.unwrap();
    assert_eq!(table.rows.len(), coupling.len());
    for (row, expect) in table.rows.iter().zip(&coupling) {
        for (a, b) in row.iter().zip(expect) {
            assert_eq!(*a, b.0);
        }
    }
    assert!((coupling[0][0].0 - 0.5).abs() < 1e-6);
}

#[test]
fn quiet_suppresses_stdout() {
    let out = woet(&["run", problem("moet_delta.json").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}

#[test]
fn infeasible_exits_two() {
    let out = woet(&["check-feasibility", problem("mass_mismatch.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.status, Status::Infeasible);
    assert!(report.reason.is_some());
}

#[test]
fn iteration_budget_exits_three() {
    let out = woet(&["solve", problem("kl_point.json").to_str().unwrap(), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.status, Status::IterLimit);
}

#[test]
fn malformed_input_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = woet(&["solve", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_object(&out)["error"], "parse_error");

    let missing = dir.path().join("missing.json");
    let out = woet(&["solve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_object(&out)["error"], "io_error");
}

#[test]
fn invalid_problem_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(
        &path,
        r#"{"schema": "woet/1", "mode": "woet", "rows": [0], "mu1": [-1], "mu2": [1],
            "f1": {"kind": "kl"}, "f2": {"kind": "kl"},
            "cost": {"kind": "linear", "matrix": [[0]]}}"#,
    )
    .unwrap();
    let out = woet(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let err = error_object(&out);
    assert!(err["message"].as_str().unwrap().len() > 0);
}

#[test]
fn usage_error_is_json() {
    let out = woet(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_object(&out)["error"], "usage_error");
}

#[test]
fn dual_evaluates_supplied_pair() {
    let out = woet(&["dual", problem("dual_pair.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let value = report.dual_value.unwrap().0;
    let expect = 1.5 * (1.0 - (-1.0f64).exp()) + 2.0 * (1.0 - 1.0f64.exp());
    assert!((value - expect).abs() < 1e-12, "{value} vs {expect}");
}

#[test]
fn homogeneous_check_reports_each_exponent() {
    let out = woet(&["homog-check", problem("homogeneous.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let h = report.homogeneous.unwrap();
    assert_eq!(h.len(), 2);
    assert!(h.iter().all(|r| r.max_discrepancy.0 <= 1e-4));
}

#[test]
fn monotone_check_finds_no_violation() {
    let out = woet(&["check-monotone", problem("kl_point.json").to_str().unwrap(), "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
}
