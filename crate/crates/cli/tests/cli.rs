use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn kirchhoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kirchhoff")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kirchhoff-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &PathBuf, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn validate_reports_counts() {
    let out = kirchhoff(&["graph", "validate", "--builtin", "k1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["vertices"], 6);
    assert_eq!(v["edges"], 9);
    assert_eq!(v["cycle_rank"], 4);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kirchhoff(&["graph", "validate", "--builtin", "nope"]).status.code(), Some(2));
    assert_eq!(kirchhoff(&["evolve", "--case", "no-such-case"]).status.code(), Some(2));
    assert_eq!(kirchhoff(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(kirchhoff(&["graph", "validate"]).status.code(), Some(2));
}

#[test]
fn decompose_outputs_cycle_part() {
    let dir = scratch("decompose");
    let f = write(&dir, "f.json", r#"{"representation":"POLY","edges":[[0,1],[1,-1]]}"#);
    let out = kirchhoff(&["decompose", "--builtin", "circles", "--input", &f]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let z: Vec<f64> = v["z"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((z[0] - 1.0).abs() < 1e-14 && (z[1] + 1.0).abs() < 1e-14);

    let bad = write(&dir, "bad.json", r#"{"representation":"POLY","edges":[[0,1],[0,0]]}"#);
    assert_eq!(kirchhoff(&["decompose", "--builtin", "circles", "--input", &bad]).status.code(), Some(1));
}

#[test]
fn identity_checks_pass_on_random_inputs() {
    for g in ["interval", "circles", "star-tree", "k1"] {
        let out = kirchhoff(&["ibp-check", "--builtin", g, "--random", "5", "--seed", "3"]);
        assert!(out.status.success(), "{g}");
        assert!(json(&out)["max_residual"].as_f64().unwrap() < 1e-9);
        let out = kirchhoff(&["quadruple", "check", "--builtin", g, "--random", "5"]);
        assert!(out.status.success(), "{g}");
    }
}

#[test]
fn expansive_theta_is_rejected() {
    let dir = scratch("theta");
    let theta = write(&dir, "theta.csv", "2,2\n2,0\n0,2\n");
    let out = kirchhoff(&["quadruple", "check", "--builtin", "circles", "--random", "1", "--theta", &theta]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["theta_is_contraction"], false);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let runs: [&[&str]; 3] = [
        &["evolve", "--builtin", "circles", "--theta-bar", "-1", "--dt", "0.01", "--t-end", "0.1", "--samples", "8"],
        &["evolve", "--rule", "k1-id", "--dt", "0.01", "--t-end", "0.1", "--samples", "8", "--snapshots", "5"],
        &["sg", "converge", "--case", "half01", "--levels", "1,2"],
    ];
    for args in runs {
        let a = kirchhoff(args);
        let b = kirchhoff(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn evolve_writes_trajectory_and_diagnostics() {
    let dir = scratch("evolve");
    let out = kirchhoff(&[
        "evolve", "--case", "interval:-1", "--dt", "0.01", "--t-end", "0.05", "--output", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,edge,sample,value\n"));
    let diag = std::fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,norm,mass"));
    assert_eq!(diag.lines().count(), 1 + 6);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["snapshots"].as_array().unwrap().len(), 2);
}

#[test]
fn resolvent_lands_in_the_output_file() {
    let dir = scratch("resolvent");
    let out = kirchhoff(&["evolve", "--case", "circles:0.5", "--lambda", "2", "--output", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let f: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("resolvent.json")).unwrap()).unwrap();
    assert_eq!(f["edges"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_exit_code_matches_report() {
    let out = kirchhoff(&["verify", "all", "--only", "2"]);
    let v = json(&out);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 1);
    assert_eq!(out.status.success(), v["passed"].as_bool().unwrap());
    assert!(String::from_utf8_lossy(&out.stderr).contains(" 2 "));
    assert_eq!(kirchhoff(&["verify", "all", "--only", "12"]).status.code(), Some(2));
    assert_eq!(kirchhoff(&["verify", "all", "--fixtures", "elsewhere"]).status.code(), Some(2));
}
