use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qperceptron"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn default_sweep_has_three_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = qp(dir.path(), &["sweep", "-o", "sweep.csv"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut series: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    series.dedup();
    assert_eq!(series, ["theta=0", "theta=+max", "theta=-max"]);
    assert!(!text.contains('\r'));
    let meta = json(&dir.path().join("sweep.json"));
    assert_eq!(meta["config"]["schedule"]["n_segments"], 1000);
    assert!(meta["config"]["schedule"]["x_ref_hz"].is_number());
    assert!(meta["metadata"]["max_deviation"].as_f64().unwrap() < 0.03);
}

#[test]
fn analytic_only_leaves_simulation_blank() {
    let dir = tempfile::tempdir().unwrap();
    let out = qp(dir.path(), &["sweep", "--analytic-only"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "p1_simulated").unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(col), Some(""));
    }
}

#[test]
fn schedule_defaults() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qp(dir.path(), &["schedule", "-o", "s.csv"]).status.success());
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1000);
    let tau = std::f64::consts::TAU;
    assert!((rows[0][2] / (tau * 28_000.0) - 1.0).abs() < 1e-12);
    assert!((rows[999][2] / (tau * 37.5) - 1.0).abs() < 1e-12);
    let total: f64 = rows.iter().map(|r| r[1]).sum();
    assert!((total - 15e-3).abs() < 1e-12);
}

#[test]
fn closed_form_schedule_reports_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = qp(dir.path(), &["schedule", "--generator", "closed-form", "-o", "c.csv"]);
    assert!(out.status.success());
    let meta = json(&dir.path().join("c.json"));
    assert_eq!(meta["boundary_report"]["boundaries_satisfied"], false);
}

#[test]
fn xnor_reference_contrast() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qp(dir.path(), &["xnor", "-o", "x.json"]).status.success());
    let v = json(&dir.path().join("x.json"));
    assert!(v["separation"].as_f64().unwrap() >= 0.2);
    assert_eq!(v["config"]["noise"]["kind"], "dephasing");
    for (bits, pops) in v["control_populations"].as_object().unwrap() {
        for (q, p) in pops.as_array().unwrap().iter().enumerate() {
            let want = if bits.as_bytes()[q] == b'1' { 1.0 } else { 0.0 };
            assert!((p.as_f64().unwrap() - want).abs() < 1e-6);
        }
    }
    assert!(qp(dir.path(), &["xnor", "--noiseless", "-o", "n.json"]).status.success());
    let n = json(&dir.path().join("n.json"));
    assert!(n["separation"].as_f64().unwrap() > v["separation"].as_f64().unwrap());
}

#[test]
fn missing_program_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("w.json"), r#"{"noise": {"kind": "none"}}"#).unwrap();
    let out = qp(dir.path(), &["xnor", "--config", "w.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("program"));
    let out = qp(dir.path(), &["xnor", "--config", "absent.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_values_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qp(dir.path(), &["schedule", "--t-f-s", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("j.json"), r#"{"register": {"n_qubits": 3, "target": 1, "couplings_hz": {"0": 80}, "j_max_hz": 37.5}}"#).unwrap();
    assert_eq!(qp(dir.path(), &["sweep", "--config", "j.json"]).status.code(), Some(2));
}

#[test]
fn flat_fringe_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = qp(dir.path(), &["ramsey", "--t2-s", "1e-6"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ramsey_recovers_coupling() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qp(dir.path(), &["ramsey", "-o", "r.json"]).status.success());
    let v = json(&dir.path().join("r.json"));
    assert!(v["relative_error"].as_f64().unwrap() < 0.01);
    assert_eq!(v["configured_coupling_hz"], 37.5);
}

#[test]
fn optimize_xnor_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("xnor.json"),
        r#"{"rows": {"00": 1.0, "01": 0.0, "10": 0.0, "11": 1.0}}"#,
    )
    .unwrap();
    let out = qp(dir.path(), &["optimize", "xnor.json", "--starts", "4", "-o", "p.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("p.json"));
    assert!(v["loss"].as_f64().unwrap() < 0.05);
    assert_eq!(v["program"]["layers"].as_array().unwrap().len(), 2);
    assert_eq!(v["starts"].as_array().unwrap().len(), 4);
    // the emitted program runs as an xnor config
    let x = serde_json::json!({ "program": v["program"], "noise": {"kind": "none"} });
    std::fs::write(dir.path().join("x.json"), x.to_string()).unwrap();
    assert!(qp(dir.path(), &["xnor", "--config", "x.json", "-o", "o.json"]).status.success());
    let o = json(&dir.path().join("o.json"));
    assert!(o["separation"].as_f64().unwrap() > 0.8);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = qp(dir.path(), &["sweep", "--threads", "1"]);
    let b = qp(dir.path(), &["sweep", "--threads", "3"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
