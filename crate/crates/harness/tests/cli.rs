//! End-to-end checks of the `nmpc` binary: subcommands, exit codes and
//! output files.

use std::path::Path;
use std::process::Command;

fn config_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nmpc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nmpc"))
}

fn write_short_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.cfg");
    let text = format!(
        "
        horizon = 12
        dt = 0.05
        slices = 5
        q_diag = 1, 2, 0.1, 5
        r_diag = 0.1
        force_min = -10
        force_max = 10
        cart_pos_min = -2
        cart_pos_max = 2
        initial_state = 0, 0, 0, 2.8
        episode_length = 0.5
        {extra}
    "
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "");
    let out_dir = tmp.path().join("episode");
    let output = nmpc()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,p,p_dot,theta,theta_dot,F,V,viol,sqp_iters,qp_iters,solve_ms,status"));
    assert_eq!(csv.lines().count(), 11); // header + 10 ticks
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!(summary["terminal_error"].is_number());
    assert!(summary["avg_solve_ms"].is_number());
    assert_eq!(summary["constraint_violations_count"], 0);
    // plot data only when asked for
    assert!(!out_dir.join("states.dat").exists());
}

#[test]
fn ticks_flag_overrides_episode_length() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "");
    let out_dir = tmp.path().join("episode");
    let status = nmpc()
        .args(["run", "--ticks", "3", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn verbose_run_dumps_solver_internals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "emit_plot_data = true");
    let out_dir = tmp.path().join("episode");
    let output = nmpc()
        .args(["run", "--verbose", "--ticks", "2", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    for file in ["states.dat", "force.dat", "solver.dat"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let first_iter = out_dir.join("debug/tick00000/iter001");
    for file in ["e.csv", "J.csv", "A.csv", "b.csv", "V.csv", "H.csv", "g.csv"] {
        assert!(first_iter.join(file).exists(), "{file} missing");
    }
    // H dump must be consistent: square, one row per decision variable
    let h = std::fs::read_to_string(first_iter.join("H.csv")).unwrap();
    assert_eq!(h.lines().count(), 12);
}

#[test]
fn missing_config_exits_two() {
    let status = nmpc()
        .args(["run", "--config", "/nonexistent/nothing.cfg"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("broken.cfg");
    std::fs::write(&path, "horizon = 10\nwhat even is this line\n").unwrap();
    let output = nmpc().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("config line 2"), "{stderr}");
}

#[test]
fn unwritable_out_dir_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "");
    // a file where the out directory should go forces the I/O error
    let blocker = tmp.path().join("blocked");
    std::fs::write(&blocker, "file, not a directory").unwrap();
    let status = nmpc()
        .args(["run", "--ticks", "1", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(blocker.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn divergence_exits_one_with_partial_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "divergence_bound = 0.05\nepisode_length = 1.0");
    let out_dir = tmp.path().join("episode");
    let output = nmpc()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let rows = csv.lines().count() - 1;
    assert!((1..20).contains(&rows), "partial log expected, got {rows} rows");
}

#[test]
fn sweep_runs_each_value_and_writes_index() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_short_config(tmp.path(), "");
    let out_dir = tmp.path().join("sweep");
    let status = nmpc()
        .args(["sweep", "--param", "horizon", "--values", "8,12", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("horizon_8/trajectory.csv").exists());
    assert!(out_dir.join("horizon_12/trajectory.csv").exists());
    let index: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sweep.json")).unwrap())
            .unwrap();
    assert_eq!(index["param"], "horizon");
    assert_eq!(index["points"].as_array().unwrap().len(), 2);
}

#[test]
fn check_subcommand_passes() {
    let output = nmpc().arg("check").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all checks passed"), "{stdout}");
}

#[test]
fn shipped_configs_parse() {
    for name in ["swingup.cfg", "setpoint.cfg"] {
        nmpc_harness::config::ScenarioConfig::from_file(&config_dir().join(name))
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
