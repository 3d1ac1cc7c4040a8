use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn werner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_werner"))
        .args(args)
        .env_remove("WERNER_THREADS")
        .output()
        .expect("binary runs")
}

fn lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn identities_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("id.jsonl");
    let o = werner(&["identities", "--d", "3", "--samples", "200", "--seed", "7", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 violations"));
    let recs = lines(&out);
    assert_eq!(recs.len(), 202);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[201]["status"], "complete");
    assert_eq!(recs[201]["summary"]["structural"]["h_order"], 18);
}

#[test]
fn psd_scan_warns_at_small_d() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let o = werner(&["psd-scan", "--d", "2", "--samples", "10", "--seed", "1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("identically"));
    let recs = lines(&out);
    assert_eq!(recs.last().unwrap()["summary"]["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(werner(&["identities", "--d", "3"]).status.code(), Some(2));
    assert_eq!(werner(&["identities", "--d", "0", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(werner(&["psd-scan", "--seed", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(werner(&["det-sample", "--d", "2", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(werner(&["oracle-crosscheck", "--d", "6", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(werner(&["frobnicate", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(werner(&["--help"]).status.code(), Some(0));
}

#[test]
fn violations_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.jsonl");
    let o = werner(&[
        "oracle-crosscheck", "--samples", "5", "--seed", "1", "--tol", "phi=1e-300", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let recs = lines(&out);
    let flagged = recs.iter().filter(|r| r["violation"] == true).count();
    assert!(flagged > 0);
    assert_eq!(recs.last().unwrap()["violations"], flagged);
    assert_eq!(recs.last().unwrap()["exit_code"], 1);
}

#[test]
fn config_file_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("r.jsonl");
    std::fs::write(&cfg, r#"{"command": "diag-verify", "d": 4, "samples": 50, "seed": 9, "tolerances": {"residual": 1e-11}}"#).unwrap();
    let o = werner(&["--config", cfg.to_str().unwrap(), "--samples", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let recs = lines(&out);
    let echoed = &recs[0]["config"];
    assert_eq!(echoed["samples"], 3);
    assert_eq!(echoed["d"], 4);
    assert_eq!(echoed["tolerances"]["residual"], 1e-11);
    assert_eq!(recs.len(), 5);
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = werner(&["det-sample", "--samples", "6", "--seed", "2", "--format", "csv", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("# {\"record\":\"header\""));
    assert!(rows[1].starts_with("index,seed,distribution,"));
    assert_eq!(rows.len(), 9);
    assert!(rows[8].starts_with("# {\"record\":\"status\""));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&out).unwrap();
    assert_eq!(reader.records().count(), 6);
}

#[test]
fn thread_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_werner"))
        .args(["psd-scan", "--samples", "70", "--seed", "3", "--output", out.to_str().unwrap()])
        .env("WERNER_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let recs = lines(&out);
    assert_eq!(recs[0]["config"]["threads"], 2);
    let single = dir.path().join("s.jsonl");
    werner(&["psd-scan", "--samples", "70", "--seed", "3", "--threads", "1", "--output", single.to_str().unwrap()]);
    assert_eq!(recs[1..], lines(&single)[1..]);
}

#[test]
fn search_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    let o = werner(&["search", "--restarts", "3", "--seed", "42", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let recs = lines(&out);
    let summary = &recs.last().unwrap()["summary"];
    assert!(summary["best_value"].as_f64().unwrap() >= -1e-8);
    assert_eq!(summary["best_point"]["d"], 3);
    let traces = dir.path().join("s.traces.csv");
    assert_eq!(summary["traces_path"], traces.to_str().unwrap());
    let mut reader = csv::Reader::from_path(&traces).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["restart", "iter", "value"]);
    let mut last: Option<(u64, f64)> = None;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let (restart, value): (u64, f64) = (rec[0].parse().unwrap(), rec[2].parse().unwrap());
        if let Some((r, v)) = last {
            if r == restart {
                assert!(value <= v + 1e-12);
            }
        }
        last = Some((restart, value));
    }
}

#[test]
fn onedistill_scan_brackets_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.jsonl");
    let o = werner(&[
        "onedistill-scan", "--restarts", "2", "--seed", "5", "--t-start", "0.48", "--t-end", "0.53", "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let recs = lines(&out);
    let summary = &recs.last().unwrap()["summary"];
    assert_eq!(summary["sign_change"], serde_json::json!([0.5, 0.51]));
    assert_eq!(summary["monotone"], true);
}
