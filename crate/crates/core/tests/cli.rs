//! Command-line contract: JSON output, exit codes and the run directory.

use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = "[problem]\nN = 2\ns = 0.5\ntau = 0.25\n\n[grid]\nuniform_segments = 48\nr_max = 10.0\nratio = 1.2\nquad_order = 8\n\n[schedule]\nk_max = 1\n\n[verify]\nmc_samples = 100000\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logchoquard")).args(args).env("LOGCHOQUARD_THREADS", "2").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn constants_emits_flat_json_with_provenance() {
    let out = run(&["constants", "--N", "2", "--s", "0.5", "--tau", "0.25", "--R", "0.3333333333333333"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = v["C_N"].as_f64().unwrap();
    assert!((c - 0.5 / std::f64::consts::PI).abs() < 1e-15);
    assert!(v["K_frak_provenance"].is_string());
    assert!(v.as_object().unwrap().values().all(|x| !x.is_object()));
    let literal = run(&["constants", "--N", "2", "--s", "0.5", "--tau", "0.25", "--mu-form", "literal"]);
    let v: serde_json::Value = serde_json::from_slice(&literal.stdout).unwrap();
    assert_eq!(v["mu_N"].as_f64(), Some(0.0));
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    assert_eq!(run(&["constants", "--N", "2", "--s", "0.5", "--tau", "0.7"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[problem]\nN = 2\ns = 0.5\ntau = 0.25\nfoo = 1\n");
    let out = run(&["check-f", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("foo"));
    let out = Command::new(env!("CARGO_BIN_EXE_logchoquard")).args(["check-f", "--config", &bad]).env("LOGCHOQUARD_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_f_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", QUICK);
    let out = run(&["check-f", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["lambda"].as_f64().unwrap() > 0.0);
    assert_eq!(v["report"]["checks"].as_array().unwrap().len(), 9);
}

#[test]
fn seminorm_of_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hat.csv");
    let mut text = String::from("r,value\n");
    for k in 0..=40 {
        let r = k as f64 / 40.0;
        text.push_str(&format!("{r},{}\n", (1.0 - 2.0 * r).max(0.0)));
    }
    std::fs::write(&path, text).unwrap();
    let out = run(&["seminorm", "--field", path.to_str().unwrap(), "--N", "2", "--s", "0.5", "--mc-samples", "200000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["relative_difference"].as_f64().unwrap() < 0.02);
}

#[test]
fn verify_all_writes_run_directory_and_poisson_rereads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", QUICK);
    let run_dir = dir.path().join("run");
    let out = run(&["verify-all", "--config", &cfg, "--out", run_dir.to_str().unwrap()]);
    // the coarse two-step schedule stops at mu = 1/2, too far from the log limit
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("FAIL limit-log-residual"), "{stderr}");
    for f in ["config.echo", "report.json", "levels.csv", "saddle_results.json", "fields/u0.csv", "fields/u_mu_1.csv", "fields/phi.csv"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let echo = std::fs::read_to_string(run_dir.join("config.echo")).unwrap();
    assert!(echo.contains("beta_factor") && echo.contains("tol_residual"));
    let levels = std::fs::read_to_string(run_dir.join("levels.csv")).unwrap();
    assert_eq!(levels.lines().count(), 3);
    let out = run(&["poisson", "--run", run_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["f_mass"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_and_static_verify_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", QUICK);
    let out = run(&["solve", "--config", &cfg, "--mu", "1", "--out", dir.path().join("solve").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["c_mu"].as_f64().unwrap() < 0.125);
    let static_only = write_config(dir.path(), "s.toml", &format!("{QUICK}solver = false\ngradient = false\n"));
    let out = run(&["verify-all", "--config", &static_only, "--out", dir.path().join("static").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("static/levels.csv").exists());
}
