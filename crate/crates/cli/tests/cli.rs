use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TABLE1: &str = "reviewer_id,a,b,c\n1,1,1,1\n2,0,0,0.2\n3,0.25,0.25,0.5\n";
const TIGHT: &str = "reviewer_id,a,b,c,d\n1,0.31,1,1,0\n2,0.29,0,1,1\n3,0,0.1,0,0.3\n4,0,0.1,0,0.3\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairassign"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn put(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn trace_fairness(dir: &Path) -> Value {
    let t: Value = serde_json::from_str(&fs::read_to_string(dir.join("trace.json")).unwrap()).unwrap();
    t["fairness"].clone()
}

#[test]
fn assign_table1_pr4a_and_tpms() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TABLE1);
    let l = put(d.path(), "l.json", r#"{"lambda": 1, "mu": 1}"#);
    let out = d.path().join("pr4a");
    let o = run(&["assign", &s, &l, "--f", "identity", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(trace_fairness(&out).as_f64(), Some(0.2));
    assert!(out.join("assignment.csv").exists() && out.join("manifest.json").exists());

    let out = d.path().join("tpms");
    let o = run(&["assign", &s, &l, "--f", "identity", "--algorithm", "tpms", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(trace_fairness(&out).as_f64(), Some(0.0));
}

#[test]
fn early_stop_and_json_stdout() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TABLE1);
    let l = put(d.path(), "l.json", r#"{"lambda": 1, "mu": 1}"#);
    let out = d.path().join("o");
    let o = run(&[
        "--json", "assign", &s, &l, "--f", "identity", "--mode", "early-stop", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["early_stopped"], Value::Bool(true));
    assert_eq!(v["fairness"].as_f64(), Some(0.2));
}

#[test]
fn malformed_cell_exits_2_naming_position() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", "reviewer_id,a,b\nr1,0.5,1.2\nr2,0,0\n");
    let l = put(d.path(), "l.json", r#"{"lambda": 1, "mu": 1}"#);
    let o = run(&["assign", &s, &l, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("column 3"), "{err}");
}

#[test]
fn infeasible_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TABLE1);
    let l = put(d.path(), "l.json", r#"{"lambda": 2, "mu": 1}"#);
    let o = run(&["assign", &s, &l, "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn oracle_reports_ratio_and_bound() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TIGHT);
    let l = put(d.path(), "l.json", r#"{"lambda": 2, "mu": 2}"#);
    let o = run(&["--json", "oracle", &s, &l, "--f", "identity"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["optimal_fairness"].as_f64().unwrap() - 0.6).abs() < 1e-9);
    assert!((v["pr4a_fairness"].as_f64().unwrap() - 0.31).abs() < 1e-9);
    let ratio = v["ratio"].as_f64().unwrap();
    assert!((ratio - 0.31 / 0.6).abs() < 1e-9);
    assert!(ratio >= v["bound"]["ratio"].as_f64().unwrap() - 1e-12);

    let s = put(d.path(), "t1.csv", TABLE1);
    let l = put(d.path(), "t1.json", r#"{"lambda": 1, "mu": 1}"#);
    let v: Value = serde_json::from_slice(&run(&["--json", "oracle", &s, &l, "--f", "identity"]).stdout).unwrap();
    assert_eq!(v["ratio"].as_f64(), Some(1.0));
}

#[test]
fn oracle_over_budget_exits_4() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("reviewer_id");
    for j in 0..10 {
        csv.push_str(&format!(",p{j}"));
    }
    csv.push('\n');
    for i in 0..10 {
        csv.push_str(&format!("r{i}"));
        for j in 0..10 {
            csv.push_str(&format!(",{}", ((i * 7 + j * 3) % 10) as f64 / 10.0));
        }
        csv.push('\n');
    }
    let s = put(d.path(), "s.csv", &csv);
    let l = put(d.path(), "l.json", r#"{"lambda": 3, "mu": 3}"#);
    let o = run(&["oracle", &s, &l, "--budget", "1000000"]);
    assert_eq!(o.status.code(), Some(4));

    // Within the size limit but out of search nodes.
    let s = put(d.path(), "tight.csv", TIGHT);
    let l = put(d.path(), "tight.json", r#"{"lambda": 2, "mu": 2}"#);
    assert_eq!(run(&["oracle", &s, &l, "--budget", "1"]).status.code(), Some(4));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = put(
        d.path(),
        "sweep.json",
        r#"{"deltas": [0.4, 0.8, 1.2, 1.6, 2.0], "trials": 100, "k": 4, "algorithms": ["pr4a", "tpms"],
            "lambda": 4, "mu": 4, "seed": 5}"#,
    );
    let mut outputs = Vec::new();
    for run_id in 0..2 {
        let out = d.path().join(format!("run{run_id}"));
        let o = run(&[
            "--threads", "2", "simulate", "--case", "c1", "--size", "20", "20", "--config", &cfg, "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("manifest.json").exists() && out.join("curves.csv").exists());
        outputs.push(fs::read(out.join("results.jsonl")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 5 * 2);
    let pr4a_at_2 = records
        .iter()
        .find(|r| r["algorithm"] == "pr4a" && r["delta"].as_f64() == Some(2.0))
        .unwrap();
    assert!(pr4a_at_2["mean"].as_f64().unwrap() < 0.01);
}

#[test]
fn simulate_records_solver_failures() {
    let d = tempfile::tempdir().unwrap();
    let cfg = put(
        d.path(),
        "sweep.json",
        r#"{"deltas": [1.0], "trials": 10, "k": 2, "algorithms": ["hard", "tpms"], "lambda": 2, "mu": 2}"#,
    );
    let out = d.path().join("o");
    let o = run(&["simulate", "--case", "c1", "--size", "10", "10", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("results.jsonl")).unwrap();
    assert!(text.lines().next().unwrap().contains("\"failure\":\"oracle too large"));
}

#[test]
fn simulate_in_fixed_world() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TIGHT);
    let cfg = put(
        d.path(),
        "sweep.json",
        r#"{"deltas": [1.0], "trials": 200, "k": 1, "algorithms": ["pr4a"], "lambda": 2, "mu": 2}"#,
    );
    let w = put(d.path(), "w.json", r#"{"theta_star": [1, 0, 0, 0], "h": {"name": "one-minus-s"}, "k": 1}"#);
    let out = d.path().join("o");
    let o = run(&["simulate", "--similarity", &s, "--config", &cfg, "--world", &w, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rec: Value = serde_json::from_str(fs::read_to_string(out.join("results.jsonl")).unwrap().trim()).unwrap();
    assert!(rec["prob"].as_f64().unwrap() <= rec["bound"].as_f64().unwrap() + 0.1);
}

#[test]
fn crowd_eval_on_synthetic_corpus() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let o = run(&[
        "--json", "crowd-eval", "--trials", "20", "--seed", "3", "--algorithms", "pr4a,random", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn report_lists_each_algorithm() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TABLE1);
    let l = put(d.path(), "l.json", r#"{"lambda": 1, "mu": 1}"#);
    let o = run(&["report", &s, &l, "--f", "identity", "--algorithms", "pr4a,tpms"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, "algorithm,fairness,cumulative,failure\npr4a,0.2,1.45,\ntpms,0,1.5,\n");
}

#[test]
fn unknown_algorithm_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    let s = put(d.path(), "s.csv", TABLE1);
    let l = put(d.path(), "l.json", r#"{"lambda": 1, "mu": 1}"#);
    let o = run(&["assign", &s, &l, "--algorithm", "greedy", "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
