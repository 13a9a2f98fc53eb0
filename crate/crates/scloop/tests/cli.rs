use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scloop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scloop"))
        .current_dir(dir)
        .env("SCLOOP_WORKERS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rate_of_square_is_four_ninths() {
    let dir = tempfile::tempdir().unwrap();
    let out = scloop(dir.path(), &["rate", "square:3,6,24", "--out", "r.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("r.json"));
    assert_eq!((v["numerator"].as_i64(), v["denominator"].as_i64()), (Some(4), Some(9)));
    assert!((v["rate"].as_f64().unwrap() - 0.4444).abs() < 1e-4);
    assert!(dir.path().join("r.json.manifest.json").exists());
}

#[test]
fn build_then_threshold_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = scloop(dir.path(), &["build", "loop:3,6,12", "--out", "l.json"]);
    assert!(out.status.success());
    let out = scloop(dir.path(), &["threshold-bec", "l.json", "--tol", "1e-3", "--out", "t.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("t.json"));
    assert!((v["epsilon_star"].as_f64().unwrap() - 0.5237).abs() < 5e-3);
    let m = json(&dir.path().join("t.json.manifest.json"));
    assert_eq!(m["subcommand"], "threshold-bec");
    assert_eq!(m["seed"], 1);
}

#[test]
fn malformed_input_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\n").unwrap();
    let out = scloop(dir.path(), &["threshold-bec", "bad.json", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!dir.path().join("t.json").exists());
    assert!(!dir.path().join("t.json.manifest.json").exists());

    fs::write(
        dir.path().join("neg.json"),
        r#"{"version":1,"name":"x","num_checks":1,"num_vars":2,"edges":[[0,0,-1],[0,1,3]]}"#,
    )
    .unwrap();
    assert_eq!(scloop(dir.path(), &["rate", "neg.json"]).status.code(), Some(1));
    assert_eq!(scloop(dir.path(), &["rate", "ring:3,6"]).status.code(), Some(1));
    assert_eq!(scloop(dir.path(), &["rate"]).status.code(), Some(2));
}

#[test]
fn lift_writes_sparse_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = scloop(dir.path(), &["lift", "chain:3,6,6", "--lift", "16", "--girth6", "--out", "h.txt"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("h.txt")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("192 128"));
    assert_eq!(lines.count(), 128);
}

#[test]
fn simulation_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, w: &'static str| {
        vec![
            "simulate", "chain:3,6,6", "--lift", "32", "--ebn0", "1.0,2.0", "--min-frame-errors", "5",
            "--max-frames", "300", "--max-iters", "40", "--workers", w, "--out", out,
        ]
    };
    assert!(scloop(dir.path(), &args("a.csv", "1")).status.success());
    assert!(scloop(dir.path(), &args("b.csv", "3")).status.success());
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(a.starts_with("snr_or_eps,frames,bit_errors,frame_errors,ber,fer,avg_iters\n"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn reproduce_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = scloop(dir.path(), &["reproduce", "table6", "--tol", "1e-3", "--out", "t6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("t6/table6.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(dir.path().join("t6/manifest.json").exists());
}

#[test]
fn complexity_flooding_matches_plain_de() {
    let dir = tempfile::tempdir().unwrap();
    let out = scloop(dir.path(), &["complexity", "chain:3,6,10", "--eps", "0.4", "--no-suppress", "--out", "c.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}
