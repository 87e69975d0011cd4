use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn interdict(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interdict"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const TRIANGLE: &str = r#"{"n": 3, "mode": "stochastic", "s": 0, "t": 2,
  "edges": [[0, 1, 0.3333333333333333], [0, 2, 0.1], [1, 2, 0.3333333333333333]]}"#;

#[test]
fn reff_single_edge() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.json", r#"{"n":2,"mode":"resistance","edges":[[0,1,2.0]],"s":0,"t":1}"#);
    let out = interdict(&["reff", g.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "2.000000000000");
}

#[test]
fn reff_of_squared_interdicted_triangle() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        r#"{{"n":3,"mode":"conductance","s":0,"t":2,"edges":[[0,1,{}],[0,2,{}],[1,2,{}]]}}"#,
        37.0 / 90.0,
        11.0 / 75.0,
        1.0 / 30.0
    );
    let g = write(dir.path(), "g.json", &text);
    let out = interdict(&["reff", g.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "5.633802816901");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", "{not json");
    assert_eq!(interdict(&["reff", bad.to_str().unwrap()]).status.code(), Some(2));

    let unknown = write(dir.path(), "unknown.json", r#"{"n":2,"mode":"resistance","edges":[],"s":0,"t":1,"x":1}"#);
    assert_eq!(interdict(&["reff", unknown.to_str().unwrap()]).status.code(), Some(2));

    let split = write(dir.path(), "split.json", r#"{"n":3,"mode":"resistance","edges":[[0,1,1.0]],"s":0,"t":2}"#);
    assert_eq!(interdict(&["reff", split.to_str().unwrap()]).status.code(), Some(3));

    let edge = write(dir.path(), "edge.json", r#"{"n":2,"mode":"resistance","edges":[[0,1,1.0]],"s":0,"t":1}"#);
    assert_eq!(interdict(&["erip", edge.to_str().unwrap(), "--budget", "1"]).status.code(), Some(4));
}

#[test]
fn cip_oneshot_on_triangle() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "tri.json", TRIANGLE);
    let x0 = write(dir.path(), "x0.json", "[1, 0, -1]");
    let out = interdict(&[
        "cip",
        g.to_str().unwrap(),
        x0.to_str().unwrap(),
        "--budget",
        "1",
        "--mode",
        "potential-oneshot",
    ]);
    let v = json(&out);
    assert_eq!(v["cut"], serde_json::json!([[0, 2]]));
    assert!((v["objective"].as_f64().unwrap() - 3.6).abs() < 1e-9);
    assert_eq!(v["termination"], "one_shot");
}

#[test]
fn brute_finds_the_better_cut() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "tri.json", TRIANGLE);
    let x0 = write(dir.path(), "x0.json", "[1, 0, -1]");
    let v = json(&interdict(&["brute", g.to_str().unwrap(), x0.to_str().unwrap(), "--budget", "1"]));
    assert!((v["objective"].as_f64().unwrap() - 400.0 / 71.0).abs() < 1e-9);
    let cuts = v["optimal_cuts"].as_array().unwrap();
    assert!(cuts.contains(&serde_json::json!([[1, 2]])));
}

#[test]
fn counterexample_checks() {
    let out = interdict(&["counterexample"]);
    assert!(out.status.success());
    assert!(stdout(&out).trim_end().ends_with("PASS"));

    let out = interdict(&["counterexample", "--transposed"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).trim_end().ends_with("FAIL"));

    let out = interdict(&["counterexample", "--kernel", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("= 11.267605633803"));
}

#[test]
fn gen_then_cip_runs() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("k6.json");
    let out = interdict(&["gen", "complete", "--n", "6", "--seed", "3", "--out", g.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&interdict(&["cip", g.to_str().unwrap(), "--budget", "3"]));
    assert_eq!(v["cut"].as_array().unwrap().len(), 3);
    assert_eq!(v["stationary"], true);

    let v = json(&interdict(&["cip", g.to_str().unwrap(), "--budget", "3", "--seed", "9"]));
    assert_eq!(v["cut"].as_array().unwrap().len(), 3);
}

#[test]
fn gadget_has_expected_size() {
    let dir = TempDir::new().unwrap();
    let k3 = write(
        dir.path(),
        "k3.json",
        r#"{"n":3,"mode":"resistance","edges":[[0,1,1.0],[0,2,1.0],[1,2,1.0]],"s":0,"t":1}"#,
    );
    let v = json(&interdict(&["gadget", k3.to_str().unwrap(), "--a", "1", "--delta", "0"]));
    assert_eq!(v["graph"]["n"], 8);
    assert_eq!(v["map"]["edge_nodes"].as_array().unwrap().len(), 3);
}

fn strip_wall(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn experiment_rows_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.cfg",
        "# all four algorithms on small complete graphs\nfamily = complete\nn = 5..10\nl = 3\nseed = 1..5\nalgorithm = all\n",
    );
    let a = interdict(&["experiment", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    let a = stdout(&a);
    assert_eq!(a.lines().count(), 121);
    assert_eq!(a.lines().next().unwrap(), "family,n,l,seed,algorithm,objective,iterations,wall_ms");

    let path = dir.path().join("out.csv");
    assert!(interdict(&["experiment", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()])
        .status
        .success());
    let b = std::fs::read_to_string(path).unwrap();
    assert_eq!(strip_wall(&a), strip_wall(&b));
}
