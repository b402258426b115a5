use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pevol_lab::artifacts::read_csv;
use pevol_lab::{FamilySpec, RunConfig};

fn pevol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pevol")).args(args).output().unwrap()
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, cfg.canonical()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn print_defaults_round_trips() {
    let out = pevol(&["--command", "print-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = RunConfig::parse(&text).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.canonical(), text);
}

#[test]
fn zero_family_holds_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.family = FamilySpec::Zero;
    cfg.contrast = None;
    let path = write_config(dir.path(), &cfg);
    let out_dir = dir.path().join("out");
    let out = pevol(&["--config", &path, "--out", out_dir.to_str().unwrap(), "--command", "check-condition"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("zero_condition.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "holds");
    assert_eq!(summary["fitted_M"], 0.0);
}

#[test]
fn constant_family_is_violated_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.family = FamilySpec::ConstantImag { c: 0.5 };
    let path = write_config(dir.path(), &cfg);
    let out_dir = dir.path().join("out");
    let out = pevol(&["--config", &path, "--out", out_dir.to_str().unwrap(), "--command", "check-condition", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let (comments, header, rows) = read_csv(&out_dir.join("constant_imag_condition.csv")).unwrap();
    let mut stamped = cfg.clone();
    stamped.run.seed = 5;
    stamped.run.command = pevol_lab::Command::CheckCondition;
    assert_eq!(comments[0], "# pevol check-condition");
    assert_eq!(comments[1], format!("# config_sha256={}", stamped.hash()));
    assert_eq!(comments[2], "# seed=5");
    assert_eq!(header, ["rho", "sup_integral", "bound_value", "argmax_x"]);
    for row in rows {
        let rho: f64 = row[0].parse().unwrap();
        let sup: f64 = row[1].parse().unwrap();
        assert!((sup - rho).abs() < 1e-9);
    }
    let (_, header, _) = read_csv(&out_dir.join("constant_imag_condition-profile.csv")).unwrap();
    assert_eq!(header, ["rho", "sup_integral", "M_log_bound"]);
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, RunConfig::default().canonical().replace("c_step = 0.25", "c_stepp = 0.25")).unwrap();
    let out = pevol(&["--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_stepp"));

    let out = pevol(&["--command", "plot", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn calculus_tests_pass_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = pevol(&["--command", "calculus-tests", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (_, header, rows) = read_csv(&dir.path().join("calculus.csv")).unwrap();
    assert_eq!(header, ["check", "value", "tolerance", "pass"]);
    assert!(rows.iter().all(|r| r[3] == "true"));
}
