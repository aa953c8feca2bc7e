//! End-to-end runs of the `mabeam` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn mabeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mabeam"))
        .args(args)
        .env_remove("MABEAM_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const ONE_USER: &str = "users = [{ distance = 6.32, angle = 1.89 }]\n";

const QUICK: &str = "
[grid]
samples = 180
rounds = 3

[swarm]
particles = 8
iterations = 10

[montecarlo]
trials = 3
";

#[test]
fn null_writes_run_tables() {
    let dir = scratch("null");
    let out = mabeam(&["null", "--out-dir", dir.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("target: gain"));
    for f in ["summary", "antennas", "gains", "trace"] {
        assert!(dir.join(format!("null_{f}.csv")).is_file(), "{f}");
    }
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = scratch("env");
    let cfg = write_config(&dir, ONE_USER);
    let out = Command::new(env!("CARGO_BIN_EXE_mabeam"))
        .args(["construct", "--config", &cfg])
        .env("MABEAM_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("construct_summary.csv").is_file());
}

#[test]
fn same_seed_gives_identical_files() {
    let a = scratch("det_a");
    let b = scratch("det_b");
    let cfg = write_config(&a, QUICK);
    for dir in [&a, &b] {
        let out = mabeam(&[
            "montecarlo",
            "--config",
            &cfg,
            "--seed",
            "11",
            "--scheme",
            "proposed,fpa,pso",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for f in [
        "montecarlo_summary.csv",
        "montecarlo_trials.csv",
        "montecarlo_drops.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn bad_config_exits_2() {
    let dir = scratch("bad_config");
    let cfg = write_config(&dir, "n_antennas = 6\nno_such_key = 1\n");
    let out = mabeam(&["null", "--config", &cfg, "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn infeasible_input_exits_2() {
    let dir = scratch("infeasible");
    // K = N leaves no degrees of freedom for the target
    let cfg = write_config(
        &dir,
        "n_antennas = 2\nusers = [{ distance = 5.0, angle = 1.5 }, { distance = 6.0, angle = 2.0 }]\n",
    );
    let out = mabeam(&["null", "--config", &cfg, "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn construct_without_closed_form_exits_2() {
    let dir = scratch("no_closed_form");
    let out = mabeam(&["construct", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_scheme_exits_2() {
    let dir = scratch("scheme");
    let out = mabeam(&[
        "null",
        "--scheme",
        "magic",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = scratch("unwritable");
    let blocker = dir.join("file");
    fs::write(&blocker, "").unwrap();
    let cfg = write_config(&dir, ONE_USER);
    let out = mabeam(&[
        "construct",
        "--config",
        &cfg,
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
