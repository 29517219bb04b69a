//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gevd_select::io;
use gevd_select::linalg::{CovariancePair, ProblemDims};
use gevd_select::mat::SymMat;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gevd-select"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

/// Write `R1 = diag(3,2,1)`, `R2 = I` as covariance files (C=3, L=1).
fn write_diag_pair(dir: &Path) -> (PathBuf, PathBuf) {
    let r1 = dir.join("r1.cov");
    let r2 = dir.join("r2.cov");
    let d1 = SymMat::from_diag(&[3.0, 2.0, 1.0]);
    let d2 = SymMat::identity(3);
    io::write_covariance(&r1, 3, 1, &d1).unwrap();
    io::write_covariance(&r2, 3, 1, &d2).unwrap();
    (r1, r2)
}

#[test]
fn exhaustive_on_diagonal_pencil() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = write_diag_pair(dir.path());
    let out = run(&[
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--method",
        "exhaustive",
        "--m",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("sensors: 0 1"), "{text}");
    assert!(text.contains("grq_db: 4.7712"), "{text}");
    assert!(text.contains("status: converged"), "{text}");
}

#[test]
fn eval_matches_select() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = write_diag_pair(dir.path());
    let out = run(&[
        "eval",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--sensors",
        "0,1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("sensors: 0 1"), "{text}");
    assert!(text.contains("grq_db: 4.7712"), "{text}");
}

#[test]
fn json_output_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = write_diag_pair(dir.path());
    let out = run(&[
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--method",
        "be",
        "--m",
        "2",
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["method"], "be");
    assert_eq!(v["status"], "converged");
    assert_eq!(v["sensors"], serde_json::json!([0, 2]));
    assert!((v["grq_db"].as_f64().unwrap() - 4.7712).abs() < 1e-9);
}

#[test]
fn invalid_budget_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = write_diag_pair(dir.path());
    let out = run(&[
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--method",
        "exhaustive",
        "--m",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn header_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, _) = write_diag_pair(dir.path());
    let other = dir.path().join("r2_bad.cov");
    let eye4 = SymMat::identity(4);
    io::write_covariance(&other, 4, 1, &eye4).unwrap();
    let out = run(&[
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        other.to_str().unwrap(),
        "--method",
        "fs",
        "--m",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header mismatch"));
}

#[test]
fn sim_select_round_trip_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("sim_r1.cov");
    let r2 = dir.path().join("sim_r2.cov");
    let manifest = dir.path().join("manifest.json");
    let out = run(&[
        "sim",
        "--c",
        "4",
        "--l",
        "2",
        "--seed",
        "7",
        "--t",
        "2000",
        "--out-r1",
        r1.to_str().unwrap(),
        "--out-r2",
        r2.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);

    // The files round-trip into the same selection the library makes.
    let (h1, m1) = io::read_covariance(&r1).unwrap();
    let (_, m2) = io::read_covariance(&r2).unwrap();
    let pair = CovariancePair::new(ProblemDims::new(h1.c, h1.l, 1), m1, m2).unwrap();
    let expected = gevd_select::baselines::exhaustive(&pair, 2, 1 << 20).unwrap();
    let sensors: Vec<String> = expected.sensors.iter().map(|s| s.to_string()).collect();

    let out = run(&[
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--method",
        "exhaustive",
        "--m",
        "2",
        "--c",
        "4",
        "--l",
        "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains(&format!("sensors: {}", sensors.join(" "))),
        "{text}\nexpected {sensors:?}"
    );
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = write_diag_pair(dir.path());
    let args = [
        "select",
        "--r1",
        r1.to_str().unwrap(),
        "--r2",
        r2.to_str().unwrap(),
        "--method",
        "random",
        "--m",
        "2",
        "--seed",
        "42",
        "--json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
