use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use loqc_core::elements::ElementDescriptor;
use loqc_core::fock::PureState;
use serde_json::Value;

fn loqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loqc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn close(v: &Value, x: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() < 1e-12
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn b2g_enumerates_half() {
    let r = json(&loqc(&["--experiment", "b2g"]));
    assert_eq!(r["experiment"], "b2g");
    assert!(close(&r["success_probability"], 0.5));
    assert!(close(&r["metrics"]["keep_probability"], 0.75));
    let total: f64 = r["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn pipeline_reports_ancilla_probability() {
    let r = json(&loqc(&["--experiment", "pipeline"]));
    assert!(close(&r["metrics"]["ancilla_probability"], 0.125));
    assert!(close(&r["success_probability"], 1.0 / 32.0));
}

#[test]
fn pid_chain_depth_five() {
    let r = json(&loqc(&["--experiment", "pid-chain", "--depth", "5"]));
    assert!(close(&r["success_probability"], 1.0));
    assert!(close(&r["metrics"]["kept_fidelity"], 1.0));
}

#[test]
fn cz_sampling_is_reproducible_and_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = loqc(&[
            "--experiment",
            "cz",
            "--mode",
            "sample",
            "--samples",
            "100000",
            "--seed",
            "42",
            "--out",
            path(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let r: Value = serde_json::from_slice(&x).unwrap();
    let f = r["success_probability"].as_f64().unwrap();
    let sigma = (0.25f64 * 0.75 / 100_000.0).sqrt();
    assert!((f - 0.25).abs() <= 4.0 * sigma, "frequency {f}");
    let counts: u64 = r["outcomes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["count"].as_u64().unwrap())
        .sum();
    assert_eq!(counts, 100_000);
}

#[test]
fn csv_output() {
    let out = loqc(&["--experiment", "g2a", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,label,disposition,probability_or_frequency")
    );
    assert!(lines.all(|l| l.starts_with("g2a,")));
}

#[test]
fn input_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("in.json");
    fs::write(
        &file,
        serde_json::to_string(&PureState::ket("VV").unwrap()).unwrap(),
    )
    .unwrap();
    let r = json(&loqc(&[
        "--experiment",
        "cz",
        "--input",
        path(&file),
        "--emit-states",
    ]));
    assert!(close(&r["success_probability"], 0.25));
    assert_eq!(r["states"].as_array().unwrap().len(), 16);
}

#[test]
fn run_circuit_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    let circuit = dir.path().join("c.json");
    fs::write(
        &input,
        serde_json::to_string(&PureState::ket("HH").unwrap()).unwrap(),
    )
    .unwrap();
    fs::write(
        &circuit,
        serde_json::to_string(&vec![ElementDescriptor::bs(0, 1)]).unwrap(),
    )
    .unwrap();
    let r = json(&loqc(&[
        "--experiment",
        "run-circuit",
        "--input",
        path(&input),
        "--circuit",
        path(&circuit),
        "--emit-states",
    ]));
    let state: PureState = serde_json::from_value(r["states"][0]["state"].clone()).unwrap();
    // Two identical photons on a balanced splitter never leave in different ports.
    assert!(state.terms().all(|(k, _)| k.occupancy(0).total() != 1));
}

#[test]
fn verify_exits_with_mismatch_code() {
    let out = loqc(&["--experiment", "verify"]);
    assert_eq!(out.status.code(), Some(3));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["tables"].as_array().unwrap().len(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("table 2: FAIL"));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(loqc(&["--experiment", "nope"]).status.code(), Some(2));
    assert_eq!(
        loqc(&["--experiment", "cz", "--mode", "sample"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        loqc(&["--experiment", "cz", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        loqc(&["--experiment", "pid-chain", "--depth", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(loqc(&[]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_four() {
    let out = loqc(&["--experiment", "cz", "--input", "/nonexistent/state.json"]);
    assert_eq!(out.status.code(), Some(4));
    let out = loqc(&[
        "--experiment",
        "b2g",
        "--out",
        "/nonexistent/dir/report.json",
    ]);
    assert_eq!(out.status.code(), Some(4));
}
