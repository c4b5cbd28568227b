//! End-to-end checks of the command-line binary: exit codes, output files,
//! and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relaybeam::experiment::CSV_HEADER;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaybeam"))
}

/// A scratch directory unique to one test.
fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("experiment.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn missing_seed_is_a_config_error() {
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("seed"), "stderr should name the seed: {msg}");
}

#[test]
fn unreadable_config_is_an_io_error() {
    let dir = scratch("cli_unreadable");
    let ghost = dir.join("ghost.cfg");
    let out = run(&["solve", "--config", ghost.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_config_value_is_a_config_error() {
    let dir = scratch("cli_invalid_value");
    let cfg = write_config(&dir, "epsilon: 1.0\n");
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("epsilon"), "stderr should name the field: {msg}");
}

#[test]
fn solve_writes_the_pinned_header_and_exits_zero() {
    let dir = scratch("cli_solve_header");
    let cfg = write_config(&dir, "k: 2\nn_trials: 2\nseed: 5\n");
    let out_path = dir.join("rows.csv");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    // Two trial rows plus the aggregate row.
    assert_eq!(lines.count(), 3);
}

#[test]
fn reruns_with_one_seed_are_byte_identical() {
    let dir = scratch("cli_determinism");
    let cfg = write_config(&dir, "k: 2\nn_trials: 3\n");
    let first = dir.join("a.csv");
    let second = dir.join("b.csv");
    for (path, jobs) in [(&first, "1"), (&second, "3")] {
        let out = run(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "99",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn json_mirror_lands_next_to_the_csv() {
    let dir = scratch("cli_json_mirror");
    let cfg = write_config(&dir, "k: 2\nn_trials: 1\nseed: 7\n");
    let out_path = dir.join("rows.csv");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mirror = fs::read_to_string(dir.join("rows.json")).unwrap();
    let rows: serde_json::Value = serde_json::from_str(&mirror).unwrap();
    assert_eq!(rows.as_array().map(Vec::len), Some(2));
    assert_eq!(rows[0]["scheme"], "proposed");
}

#[test]
fn region_grid_override_sets_the_row_count() {
    let dir = scratch("cli_region_grid");
    let cfg = write_config(&dir, "k: 2\nn_trials: 1\nseed: 3\n");
    let out_path = dir.join("region.csv");
    let out = run(&[
        "region",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    // Header, three grid rows for the single trial, three aggregate rows.
    assert_eq!(text.lines().count(), 7);
    assert_eq!(text.lines().nth(1).map(|l| l.starts_with("region,0,")), Some(true));
}

#[test]
fn sweep_without_a_spec_is_a_config_error() {
    let dir = scratch("cli_sweep_missing");
    let cfg = write_config(&dir, "k: 2\nn_trials: 1\nseed: 3\n");
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
