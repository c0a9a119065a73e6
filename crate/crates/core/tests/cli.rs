use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use btq::config::CheckId;

fn btq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btq")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
  "geometry": {"name": "fubini_study"},
  "p_list": [8, 16, 32],
  "symbols": {"f": {"kind": "bump", "center": [0.1, 0.0], "radius": 1.5, "power": 8},
              "g": {"kind": "gaussian", "center": [0.0, 0.2], "width": 0.6}},
  "checks": ["bergman", "product", "toeplitz", "space"]
}"#;

#[test]
fn list_checks_matches_config_ids() {
    let out = btq(&["list-checks"]);
    assert!(out.status.success());
    let listed: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    let ids: Vec<String> = CheckId::ALL.iter().map(|c| c.to_string()).collect();
    assert_eq!(listed, ids);
}

#[test]
fn describe_names_laws_and_rejects_unknown_ids() {
    let out = btq(&["describe", "commutator"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("semiclassical commutator law"));
    let out = btq(&["describe", "szego"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("counting-function law"));
    assert_eq!(btq(&["describe", "nope"]).status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"geometry": {"name": "torus"}}"#);
    let out = btq(&["run", "--config", &cfg, "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("geometry.name"));
    let cfg = write_config(dir.path(), r#"{"geometry": {"name": "bargmann"}, "extra": 1}"#);
    assert_eq!(btq(&["run", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn forced_truncation_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"geometry": {"name": "bargmann"}, "p_list": [64], "truncation": {"fixed": 2}, "checks": ["space"]}"#);
    let out = btq(&["run", "--config", &cfg, "--out", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stdout).unwrap().contains("truncation"));
}

#[test]
fn run_writes_summary_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let rep = dir.path().join("r");
    let out = btq(&["run", "--config", &cfg, "--out", rep.to_str().unwrap(), "--seed", "5"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    // One verdict line per check, in list order.
    let verdicts: Vec<&str> = stdout.lines().filter(|l| l.starts_with("PASS")).map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(verdicts, ["space", "bergman", "toeplitz", "product"]);
    let product = fs::read_to_string(rep.join("product.csv")).unwrap();
    assert!(product.starts_with("p,dim,e0,e1,"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
    assert_eq!(summary["environment"]["seed"], 5);
    for check in summary["checks"].as_array().unwrap() {
        for m in check["measurements"].as_array().unwrap() {
            let prov = m["provenance"].as_str().unwrap();
            assert!(["closed-form", "calibration", "self-consistency-slope"].contains(&prov));
            assert!(m["comparison"]["kind"].is_string());
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(btq(&["run", "--config", &cfg, "--out", d.to_str().unwrap(), "--checks", "bergman,product"]).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let csvs: Vec<_> = names.iter().filter(|n| n.to_str().unwrap().ends_with(".csv")).collect();
    assert!(csvs.len() >= 4);
    for n in csvs {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_btq"))
        .args(["run", "--config", &cfg, "--checks", "space"])
        .env("TOEPLITZ_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
