use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn models() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "golden.json", r#"{"symbols": ["a", "b"], "transitions": [[1, 1], [1, 0]]}"#);
    write(d, "full2.json", r#"{"transitions": [[1, 1], [1, 1]]}"#);
    write(
        d,
        "rose2.json",
        r#"{"vertices": 1, "edges": [{"from": 0, "to": 0, "length": 1}, {"from": 0, "to": 0, "length": "1/1"}]}"#,
    );
    write(d, "circle.json", r#"{"vertices": 1, "edges": [{"from": 0, "to": 0, "length": 1}]}"#);
    write(d, "zero.json", r#"{"type": "zero"}"#);
    write(d, "psi.json", r#"{"type": "cylinder", "width": 1, "table": {"0": 0, "1": 1}}"#);
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn spec_tau_golden_mean() {
    let dir = models();
    let o = run(dir.path(), &["spec-tau", "--sft", "golden.json", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("tau = 1"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/spec-tau.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["tau"], 1);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["version"].is_string());
    let bb = report["result"]["witnesses"]
        .as_array()
        .unwrap()
        .iter()
        .find(|w| w["from"] == "b" && w["to"] == "b")
        .unwrap();
    assert_eq!(bb["gap"], "a");
}

#[test]
fn rose_pressure_is_log_three() {
    let dir = models();
    let o = run(
        dir.path(),
        &["pressure", "--graph", "rose2.json", "--potential", "zero.json", "--method", "spectral"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("P = 1.098612"), "{}", stdout(&o));
}

#[test]
fn circle_is_rejected() {
    let dir = models();
    let o = run(dir.path(), &["pressure", "--graph", "circle.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fundamental group is Z"));
}

#[test]
fn malformed_model_is_rejected() {
    let dir = models();
    write(dir.path(), "bad.json", r#"{"transitions": [[1, 2]]}"#);
    assert_eq!(run(dir.path(), &["spec-tau", "--sft", "bad.json"]).status.code(), Some(2));
}

#[test]
fn usage_errors() {
    let dir = models();
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(64));
    // Sampling subcommands need a seed.
    assert_eq!(run(dir.path(), &["gibbs", "--sft", "golden.json"]).status.code(), Some(64));
    assert_eq!(
        run(dir.path(), &["spec-tau", "--sft", "golden.json", "--graph", "rose2.json"]).status.code(),
        Some(64)
    );
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn equidistribution_csv() {
    let dir = models();
    let o = run(dir.path(), &["equidistribute", "--graph", "rose2.json", "--t-grid", "4,8", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/equidistribute.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,D,orbits,log_c");
    assert_eq!(lines.len(), 3);
    let d: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(d[1] < d[0]);
}

#[test]
fn ldp_reports_are_reproducible() {
    let dir = models();
    let args = [
        "ldp", "--sft", "full2.json", "--psi", "psi.json", "--epsilon", "0.1", "--samples", "5000", "--seed", "7",
    ];
    let mut reports = Vec::new();
    for out in ["a", "b"] {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert_eq!(run(dir.path(), &a).status.code(), Some(0));
        reports.push(fs::read(dir.path().join(out).join("ldp.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let report: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    let q = report["result"]["tables"][0]["rows"][0]["q"].as_f64().unwrap();
    assert!((q - 0.020136).abs() < 1e-5);
}

#[test]
fn glue_verifies_shadowing() {
    let dir = models();
    write(
        dir.path(),
        "segs.json",
        r#"[{"point": {"word": "b", "height": 0.5}, "duration": 3}, {"point": {"word": "ab"}, "duration": 4}]"#,
    );
    write(dir.path(), "full2-named.json", r#"{"symbols": ["a", "b"], "transitions": [[1, 1], [1, 1]]}"#);
    let o = run(dir.path(), &["glue", "--sft", "full2-named.json", "--segments", "segs.json", "--delta", "0.2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("shadowing verified: true"));
}

#[test]
fn entropy_dense_certificate() {
    let dir = models();
    write(
        dir.path(),
        "target.json",
        r#"{"components": [{"weight": 0.5, "kernel": [[0.9, 0.1], [0.9, 0.1]]}, {"weight": 0.5, "kernel": [[0.1, 0.9], [0.1, 0.9]]}]}"#,
    );
    let o = run(
        dir.path(),
        &["entropy-dense", "--sft", "full2.json", "--target", "target.json", "--eta", "0.05", "--seed", "1", "--out", "out"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/entropy-dense.json")).unwrap()).unwrap();
    assert!(report["result"]["D"].as_f64().unwrap() < 0.05);
    assert!(report["result"]["count_certificate"].is_null());
}
