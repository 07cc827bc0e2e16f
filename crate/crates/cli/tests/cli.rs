use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kzchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kzchain"))
        .args(args)
        .env_remove("KZCHAIN_WORKERS")
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, scenario: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", scenario, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    kzchain(&args)
}

#[test]
fn list_shows_every_scenario() {
    let out = kzchain(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "kz-integrable",
        "kzm-analytics",
        "bcs-sweep",
        "critical-point",
        "crossover",
        "ed-gap",
        "ed-drive",
        "crash-test",
        "pair-drive",
        "amplitude-scan",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn crossover_writes_result_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "crossover", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("crossover.json")).unwrap()).unwrap();
    let p = result["perturbative"].as_f64().unwrap();
    assert!((p - (8.0 - 4.0 * 3f64.sqrt())).abs() < 1e-14);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "crossover");
    assert_eq!(manifest["config"]["params"]["g_lo"], 0.5);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["outputs"][0], "crossover.json");
}

#[test]
fn critical_point_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cp.toml");
    fs::write(&cfg, "scenario = \"critical-point\"\nn_g = 26\n").unwrap();
    let out = kzchain(&["validate", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run_in(dir.path(), "critical-point", &["--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("critical_point.json")).unwrap()).unwrap();
    assert!((result["g_c_bcs"].as_f64().unwrap() - 2.48135).abs() < 0.005);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--g", "0.25", "--A=0.005", "--t_end", "30"];
    assert!(run_in(a.path(), "pair-drive", &flags).status.success());
    assert!(run_in(b.path(), "pair-drive", &flags).status.success());
    for f in ["pair_drive.csv", "pair_coefficients.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let head = fs::read_to_string(a.path().join("pair_drive.csv")).unwrap();
    assert!(head.starts_with("t,delta_g,x,zz_prediction\n"));
}

#[test]
fn ed_drive_reports_the_pair_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "ed-drive", &["--L", "8", "--t_end", "40"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ed_drive_fit.json")).unwrap()).unwrap();
    let f = fit["fit"]["frequency"].as_f64().unwrap();
    assert!((f - 7.953).abs() < 0.08, "{f}");
    assert!(dir.path().join("ed_drive.csv").exists());
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), "nope", &[]).status.code(), Some(2));
    assert_eq!(
        run_in(dir.path(), "crossover", &["--bogus", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(run_in(dir.path(), "ed-drive", &["--L", "0.5"]).status.code(), Some(2));
    assert_eq!(
        run_in(dir.path(), "crossover", &["--g_lo", "0.1", "--g_hi", "0.2"])
            .status
            .code(),
        Some(2)
    );
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "g = 0.25\n").unwrap();
    assert_eq!(kzchain(&["validate", cfg.to_str().unwrap()]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_kzchain"))
        .args(["run", "crossover", "--out", dir.path().to_str().unwrap()])
        .env("KZCHAIN_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "kz-integrable",
        &["--dt", "200", "--tauQ", "[8]", "--nodes", "64", "--lz_tauQ", "8"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evolve_modes"));
}
