use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modlab_cli::config::{ExperimentConfig, Kind, DEFAULT_CONFIG};
use tempfile::TempDir;

fn modlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modlab")).args(args).output().expect("spawn modlab")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn subspace_config(d: usize) -> String {
    let mut cfg = ExperimentConfig::default_config();
    cfg.kind = Kind::Subspace;
    cfg.subspace.d = d;
    cfg.to_toml()
}

#[test]
fn type_error_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), &DEFAULT_CONFIG.replace("\ntol = 1e-9", "\ntol = \"tight\""));
    let out = modlab(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("subspace.tol"), "{}", stderr(&out));
}

#[test]
fn empty_pool_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::default_config();
    cfg.modloc.pool.clear();
    let path = write_config(tmp.path(), &cfg.to_toml());
    let out = modlab(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("modloc.pool"), "{}", stderr(&out));
}

#[test]
fn unknown_check_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), DEFAULT_CONFIG);
    let out = modlab(&["run", "--config", path.to_str().unwrap(), "--check", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn list_checks_covers_every_criterion() {
    let out = modlab(&["list-checks"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), modlab_cli::checks::CHECKS.len());
    for c in modlab_cli::checks::CHECKS {
        assert!(text.contains(c.id));
    }
}

#[test]
fn printed_schema_loads() {
    let out = modlab(&["print-schema"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap().to_toml(), cfg.to_toml());
}

#[test]
fn subspace_run_writes_report_and_plots() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), &subspace_config(6));
    let dir = tmp.path().join("out");
    let out = modlab(&["run", "--config", path.to_str().unwrap(), "--seed", "11", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["passed"], true);
    let checks: Vec<_> = report["records"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert!(checks.iter().all(|c| c.starts_with("subspace.")));
    assert!(dir.join("subspace_modular.csv").exists());
    assert!(dir.join("subspace_fiber.csv").exists());
}

#[test]
fn refine_with_one_resolution_is_a_plain_run() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), &subspace_config(4));
    let dir = tmp.path().join("out");
    let out = modlab(&["refine", "--config", path.to_str().unwrap(), "--ladder", "4096", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("refine.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["freefield"]["n_points"], 4096);
    assert!(dir.join("subspace_modular.csv").exists());
}

#[test]
fn non_refining_ladder_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), DEFAULT_CONFIG);
    let out = modlab(&["refine", "--config", path.to_str().unwrap(), "--ladder", "8192,4096"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--ladder"), "{}", stderr(&out));
}

#[test]
fn refine_ladder_writes_series() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), DEFAULT_CONFIG);
    let dir = tmp.path().join("out");
    let out = modlab(&[
        "refine",
        "--config",
        path.to_str().unwrap(),
        "--ladder",
        "7:16384,8:16384,8:32768",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.join("refine.csv")).unwrap();
    assert!(csv.starts_with("resolution,check,residual"));
    assert!(csv.contains("8:32768"));
}
