use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const MARKOV: &str = r#"{"domain": {"type":"interval","lo":0,"hi":10,"grid_step":0.01},
 "constraints":[{"f":"1","target":[1,1]},{"f":"x","target":[1,1]}],
 "objective":"(x >= 2)"}"#;

const FINITE: &str = r#"{"domain":{"type":"finite","points":[{"id":0,"coord":0},{"id":1,"coord":1},{"id":2,"coord":2},{"id":3,"coord":3}]},
 "constraints":[{"f":"1","target":1},{"f":"x","target":1.5}], "objective":"x^2"}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn momentset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momentset")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn solve_markov_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", MARKOV);
    let o = momentset(&["solve", &p, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["status"], "optimal");
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["certificate"]["accepted"], true);
    let atoms = v["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 2);
    // 17 significant digits.
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"value\":5.0000000000000000e-1"), "{text}");
}

#[test]
fn solve_text_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", MARKOV);
    let o = momentset(&["solve", &p, "--grid-step", "0.37", "--no-refine", "--tol", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("status: optimal"));
    assert!(text.contains("refined: no"));
}

#[test]
fn solve_infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &MARKOV.replace(r#""target":[1,1]}]"#, r#""target":[11,11]}]"#));
    let o = momentset(&["solve", &p, "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    assert_eq!(v["status"], "infeasible");
    assert_eq!(v["value"], "-inf");
    assert!(v["phase1_residual"].is_array());
}

#[test]
fn solve_unbounded_exit_code() {
    let text = r#"{"domain":{"type":"finite","points":[{"id":0},{"id":1}], "F":[[1,0]], "g":[0,1]},
        "constraints":[{"target":[1,1]}]}"#;
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", text);
    let o = momentset(&["solve", &p, "--json"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout_json(&o)["status"], "unbounded");
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", FINITE);
    let extreme = write(dir.path(), "a.json", r#"{"atoms":[{"coord":0,"weight":0.5},{"coord":3,"weight":0.5}]}"#);
    let interior = write(
        dir.path(),
        "b.json",
        r#"{"atoms":[{"id":0,"weight":0.25},{"id":1,"weight":0.25},{"id":2,"weight":0.25},{"id":3,"weight":0.25}]}"#,
    );
    let outside = write(dir.path(), "c.json", r#"{"atoms":[{"coord":0,"weight":1}]}"#);

    assert_eq!(momentset(&["certify", &p, "--measure", &extreme]).status.code(), Some(0));
    let o = momentset(&["certify", &p, "--measure", &interior, "--json"]);
    assert_eq!(o.status.code(), Some(4));
    let v = stdout_json(&o);
    assert_eq!(v["is_extreme"], false);
    assert_eq!(v["witness"]["phi"].as_array().unwrap().len(), 4);
    assert_eq!(momentset(&["certify", &p, "--measure", &outside]).status.code(), Some(5));
}

#[test]
fn vertices_lists_extreme_points() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", FINITE);
    let o = momentset(&["vertices", &p]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 4);
    let best = list.iter().map(|e| e["objective"].as_f64().unwrap()).fold(f64::MIN, f64::max);
    assert_eq!(best, 4.5);
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(momentset(&[]).status.code(), Some(1));
    assert_eq!(momentset(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(momentset(&["solve", "/nonexistent/p.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", MARKOV);
    assert_eq!(momentset(&["vertices", &p]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.json", r#"{"domain":{"type":"interval","lo":0,"hi":1}}"#);
    let o = momentset(&["solve", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("constraints"));
}
