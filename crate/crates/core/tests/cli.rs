use std::process::{Command, Output};

use jsonschema::Validator;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharpbound")).args(args).env_remove("SHARPBOUND_TOL").output().unwrap()
}

fn run_env(args: &[&str], tol: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharpbound")).args(args).env("SHARPBOUND_TOL", tol).output().unwrap()
}

fn validator() -> Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}\n{doc}");
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const B12: [&str; 8] = ["--m1", "1", "--M1", "2", "--m2", "1", "--M2", "2"];

#[test]
fn verify_small_run_passes() {
    let out = run(&["verify", "--dims", "1", "--count", "10", "--seed", "7", "--checks", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["failures"], 0);
}

#[test]
fn unknown_check_is_config_error() {
    let out = run(&["verify", "--dims", "1", "--count", "1", "--seed", "7", "--checks", "no_such_check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_check"));
}

#[test]
fn partial_bounds_are_config_error() {
    let out = run(&["constants", "--m1", "1", "--M1", "2", "--m2", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--M2"));
}

#[test]
fn invalid_bounds_are_config_error() {
    let out = run(&["constants", "--m1", "3", "--M1", "2", "--m2", "1", "--M2", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_jobs_is_config_error() {
    let out = run(&["verify", "--dims", "1", "--count", "1", "--seed", "7", "--jobs", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_precedence() {
    let args = ["verify", "--dims", "1", "--count", "2", "--seed", "3", "--checks", "dm"];
    assert_eq!(stdout_json(&run_env(&args, "1e-6"))["tolerance"], 1e-6);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--tol", "1e-5"]);
    assert_eq!(stdout_json(&run_env(&with_flag, "1e-6"))["tolerance"], 1e-5);
    assert_eq!(run_env(&args, "banana").status.code(), Some(2));
    assert_eq!(run_env(&args, "-1").status.code(), Some(2));
    assert_eq!(stdout_json(&run(&args))["tolerance"], 1e-9);
}

#[test]
fn constants_match_schema() {
    let v = validator();
    let mut args = vec!["constants"];
    args.extend(B12);
    args.extend(["--mean", "geometric", "--mean", "weighted(0.25)"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_valid(&v, &doc);
    assert_eq!(doc["general"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_outputs_match_schema() {
    let v = validator();
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("r.jsonl");
    let summary = dir.path().join("s.json");
    let out = run(&[
        "verify",
        "--dims",
        "1,3",
        "--count",
        "3",
        "--seed",
        "9",
        "--out",
        jsonl.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_valid(&v, &stdout_json(&out));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_valid(&v, &written);
    let text = std::fs::read_to_string(&jsonl).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    for line in lines {
        let doc: Value = serde_json::from_str(line).unwrap();
        assert!(doc.get("check_name").is_some());
        assert_valid(&v, &doc);
    }
}

#[test]
fn falsify_report_matches_schema() {
    let v = validator();
    for (target, dim) in [("conjecture_ps2", "2"), ("conjecture_dm2", "3"), ("conjecture_ps2", "1")] {
        let mut args = vec!["falsify", "--target", target, "--dim", dim, "--budget", "300", "--seed", "1"];
        args.extend(B12);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let doc = stdout_json(&out);
        assert_valid(&v, &doc);
        assert_eq!(doc["backstop_tripped"], false);
    }
}

#[test]
fn schema_rejects_malformed_report() {
    let v = validator();
    let bad = serde_json::json!({ "check_name": "dm", "holds": "yes" });
    assert!(!v.is_valid(&bad));
}

#[test]
fn sweep_writes_csv() {
    let out = run(&["sweep", "--ratios", "1,4", "--dim", "2", "--budget", "100", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    let width = rows[0].split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == width));
}

#[test]
fn demo_passes() {
    let out = run(&["demo"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stdout.is_empty());
}
