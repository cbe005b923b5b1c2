mod common;

use std::process::Command;

use common::{config_path, tmp_dir};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_grouplearn"));
    c.env_remove("GROUPLEARN_OUT");
    c
}

fn write_small(dir: &std::path::Path, horizon: u64) -> std::path::PathBuf {
    let text = std::fs::read_to_string(config_path("fig1.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["horizon"] = horizon.into();
    v["seeds"] = serde_json::json!([3, 4]);
    let path = dir.join("small.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_metrics_and_manifest() {
    let dir = tmp_dir("cli-run");
    let cfg = write_small(dir.path(), 300);
    let out = dir.path().join("out");
    let res = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--trace")
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("metrics.csv").is_file());
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("traces/u_full_seed4.csv").is_file());
}

#[test]
fn env_var_sets_default_output() {
    let dir = tmp_dir("cli-env");
    let cfg = write_small(dir.path(), 50);
    let out = dir.path().join("from-env");
    let res = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .env("GROUPLEARN_OUT", &out)
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(out.join("metrics.csv").is_file());
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tmp_dir("cli-sweep");
    let cfg = write_small(dir.path(), 100);
    let out = dir.path().join("sweep");
    let res = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--param", "L", "--values", "1,5,20", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for l in [1, 5, 20] {
        assert!(out.join(format!("L_{l}/metrics.csv")).is_file());
    }
}

#[test]
fn bounds_prints_csv() {
    let dir = tmp_dir("cli-bounds");
    let cfg = write_small(dir.path(), 1000);
    let res = bin().args(["bounds", "--config"]).arg(&cfg).output().unwrap();
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("algorithm,user,exponent,t,bound_value"));
    assert!(lines.any(|l| l.starts_with("u_full,2,1,1000,")));
}

#[test]
fn invalid_config_fails_with_structured_error() {
    let dir = tmp_dir("cli-bad");
    let text = std::fs::read_to_string(config_path("fig1.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["world"]["k"] = 9.into();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let res = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert!(!res.status.success());
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["field"], "world.k");
    assert!(err["error"].as_str().unwrap().contains("k"));
}

#[test]
fn partial_disclosure_rejects_full_algorithms() {
    let dir = tmp_dir("cli-disc");
    let text = std::fs::read_to_string(config_path("fig1.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["disclosure"] = serde_json::json!({"mode": "partial"});
    let path = dir.path().join("partial.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let res = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["field"], "disclosure");
}

#[test]
fn missing_config_is_an_error() {
    let res = bin().args(["run", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert!(!res.status.success());
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert!(err["error"].is_string());
}
