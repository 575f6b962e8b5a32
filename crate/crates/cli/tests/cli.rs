use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpc")).args(args).output().expect("run gpc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_a_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpc(&[
        "run",
        "--algorithm",
        "gpc-cs",
        "--environment",
        "pendulum",
        "--seeds",
        "0..2",
        "--set",
        "episodes=2",
        "--threads",
        "1",
        "-o",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let log = dir.path().join("gpc-cs-pendulum-e00-none.runlog.csv");
    let text = fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("#gpc-runlog v1\n"));
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(dir.path().join("gpc-cs-pendulum-e00-none.summary.csv").exists());

    let summary = dir.path().join("again.csv");
    let out = gpc(&["summarize", path(&log), "--window", "2", "--out", path(&summary)]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&summary).unwrap();
    assert!(text.starts_with("#gpc-summary v1\n"));
    assert_eq!(text.lines().count(), 2 + 2);
}

#[test]
fn runs_are_reproducible_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let first = gpc(&[
        "run",
        "--algorithm",
        "coach",
        "--environment",
        "cart-pole",
        "--set",
        "episodes=1",
        "--seeds",
        "4",
        "-o",
        path(&dir.path().join("a")),
    ]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let mut exp =
        gpc_core::harness::ExperimentConfig::defaults(gpc_core::harness::Algorithm::Coach, gpc_core::EnvKind::CartPole);
    exp.episodes = 1;
    exp.seeds = vec![4];
    fs::write(&cfg, exp.to_toml()).unwrap();
    let second = gpc(&["run", "-c", path(&cfg), "-o", path(&dir.path().join("b"))]);
    assert_eq!(code(&second), 0, "{}", String::from_utf8_lossy(&second.stderr));
    let name = "coach-cart-pole-e00-none.runlog.csv";
    assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
}

#[test]
fn replay_reproduces_the_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let (streams, snaps) = (dir.path().join("streams"), dir.path().join("snapshots"));
    let out = gpc(&[
        "run",
        "--algorithm",
        "gpc-ns",
        "--environment",
        "pendulum",
        "--seeds",
        "3",
        "--set",
        "episodes=2",
        "--set",
        "error_rate=0.2",
        "--streams",
        "--snapshots",
        "-o",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stream = streams.join("gpc-ns-pendulum-e20-none-seed3.steps.csv");
    let snapshot = snaps.join("gpc-ns-pendulum-e20-none-seed3.snapshot");
    let replayed = dir.path().join("replayed.snapshot");
    let out = gpc(&["replay", path(&stream), "--snapshot-out", path(&replayed), "--expect", path(&snapshot)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 action mismatches"));
    assert_eq!(fs::read(&replayed).unwrap(), fs::read(&snapshot).unwrap());

    // A different model is reported as a mismatch.
    let other = dir.path().join("other.snapshot");
    fs::write(&other, "#gpc-snapshot v1\n").unwrap();
    assert_eq!(code(&gpc(&["replay", path(&stream), "--expect", path(&other)])), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gpc(&[])), 1);
    assert_eq!(code(&gpc(&["frobnicate"])), 1);
    assert_eq!(code(&gpc(&["--help"])), 0);
    assert_eq!(code(&gpc(&["run", "--algorithm", "gpc-cs"])), 1, "missing environment");
    assert_eq!(code(&gpc(&["run", "--algorithm", "gpc-cs", "--environment", "pendulum", "--set", "error_rate=2"])), 1);
    assert_eq!(code(&gpc(&["run", "--algorithm", "gpc-cs", "--environment", "pendulum", "--set", "bogus=1"])), 1);
    assert_eq!(code(&gpc(&["run", "--algorithm", "gpc-cs", "--environment", "pendulum", "--seeds", "3..1"])), 1);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "algorithm = \"gpc-cs\"\nunknown = 1\n").unwrap();
    assert_eq!(code(&gpc(&["run", "-c", path(&bad)])), 1);
    assert_eq!(code(&gpc(&["replay", path(&dir.path().join("missing.csv"))])), 1);
    let stale = dir.path().join("stale.steps.csv");
    fs::write(&stale, "#gpc-steps v0\n").unwrap();
    let out = gpc(&["replay", path(&stale)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
}

#[test]
fn zero_episodes_writes_an_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpc(&[
        "run",
        "--algorithm",
        "gpc-ns",
        "--environment",
        "lander",
        "--set",
        "episodes=0",
        "-o",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("gpc-ns-lander-e00-none.runlog.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}
