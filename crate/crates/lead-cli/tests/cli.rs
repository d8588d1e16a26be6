//! End-to-end checks of the `lead` binary: solve output, the
//! run/replay/analyze flow over a real directory, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn lead(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lead"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("experiment.toml");
    std::fs::write(
        &path,
        r#"
[experiment]
puzzle = "checkers"
n = 3
episodes = 5
seed = 7

[strategy]
kind = "atomic_voted"
base_votes = 2
margin = 2

[agent]
kind = "mock"

[agent.mock]
hard_steps = [{ step = 4, p = 0.7 }]
"#,
    )
    .unwrap();
    path
}

#[test]
fn solve_prints_the_expected_listing() {
    let dir = tempfile::tempdir().unwrap();
    let out = lead(&["solve", "--puzzle", "hanoi", "-n", "3"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.trim_end(),
        "solution = [
  {'move': [1, 0, 2], 'state': [[3, 2], [], [1]]},
  {'move': [2, 0, 1], 'state': [[3], [2], [1]]},
  {'move': [1, 2, 1], 'state': [[3], [2, 1], []]},
  {'move': [3, 0, 2], 'state': [[], [2, 1], [3]]},
  {'move': [1, 1, 0], 'state': [[1], [2], [3]]},
  {'move': [2, 1, 2], 'state': [[1], [], [3, 2]]},
  {'move': [1, 0, 2], 'state': [[], [], [3, 2, 1]]},
]"
    );
}

#[test]
fn run_replay_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let run_dir = dir.path().join("run");
    let out = lead(
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            run_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("strategy,puzzle,n,agent,episodes,successes,success_pct"));
    assert!(run_dir.join("manifest.toml").exists());
    assert!(run_dir.join("transcripts/episode_00000.jsonl").exists());
    assert!(run_dir.join("summary/success.csv").exists());

    let out = lead(&["replay", run_dir.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 7, "{stdout}");
    assert!(stdout.contains("replay verdict:"));

    let analysis_dir = dir.path().join("analysis");
    let out = lead(
        &[
            "analyze",
            run_dir.to_str().unwrap(),
            "--out-dir",
            analysis_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(analysis_dir.join("success.csv").exists());
    assert!(analysis_dir.join("rank_order.csv").exists());
}

#[test]
fn profile_writes_step_error_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let profile_dir = dir.path().join("profile");
    let out = lead(
        &[
            "profile",
            "--config",
            config.to_str().unwrap(),
            "--samples",
            "20",
            "--out-dir",
            profile_dir.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(profile_dir.join("step_errors.csv")).unwrap();
    // 15 trajectory steps plus the header.
    assert_eq!(table.lines().count(), 16);
    assert!(profile_dir.join("error_histogram.csv").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        r#"
[experiment]
puzzle = "checkers"
n = 3

[strategy]
kind = "lead"
history_window = 9
lookahead_depth = 2

[agent]
kind = "mock"
"#,
    )
    .unwrap();
    let out = lead(&["run", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // A missing config file is also a config error.
    let out = lead(&["run", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // So is invoking run without a config at all.
    let out = lead(&["run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_failures_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = lead(&["solve", "--puzzle", "checkers", "-n", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = lead(&["replay", "missing-run-dir"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn agent_override_swaps_in_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = lead(
        &["run", "--config", config.to_str().unwrap(), "--agent", "oracle"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("oracle,5,5,100.0"), "{stdout}");
}
