use std::path::Path;
use std::process::{Command, Output};

use w4_harness::{CaseId, ExperimentConfig};

fn w4reset(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_w4reset"));
    cmd.args(args).env_remove("W4RESET_OUTPUT_DIR");
    if let Some(d) = env_dir {
        cmd.env("W4RESET_OUTPUT_DIR", d);
    }
    cmd.output().unwrap()
}

#[test]
fn sweep_writes_outputs_to_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = w4reset(&["sweep", "case1a"], Some(dir.path()));
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("plotdata/bloch_trajectory.csv").exists());
}

#[test]
fn run_from_config_and_emit_plots() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(CaseId::Case3Random);
    cfg.n_random = Some(5);
    cfg.output_dir = dir.path().join("out");
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let out = w4reset(&["--workers", "2", "run", path.to_str().unwrap()], None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bars = cfg.output_dir.join("plotdata/bar_per_unitary.csv");
    std::fs::remove_file(&bars).unwrap();
    let out = w4reset(
        &[
            "emit-plots",
            "--output-dir",
            cfg.output_dir.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(bars).unwrap().lines().count(), 6);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(CaseId::Case1a);
    cfg.n_random = Some(3);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let out = w4reset(&["run", path.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep|n_random|single"));

    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(
        w4reset(&["run", path.to_str().unwrap()], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unreachable_calibration_exits_with_3() {
    let out = w4reset(
        &["calibrate", "--target", "initial-mixed-d", "--value", "0.9"],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn calibration_output_feeds_noise_flag() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = w4reset(
        &[
            "calibrate",
            "--target",
            "initial-mixed-d",
            "--output",
            model.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let out = w4reset(
        &["random", "--n", "3", "--noise", model.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"tphi_us\""));
}

#[test]
fn schema_is_valid_json() {
    let out = w4reset(&["schema"], None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["title"], "ExperimentConfig");
}
