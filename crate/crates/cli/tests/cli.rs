//! End-to-end tests of the command-line interface: exit codes, config-file
//! precedence and output formats.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_burgers-spde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn matrix_dump_matches_ground_truth() {
    let out = run(&["matrix-dump", "--dim", "1", "--n", "3", "--which", "B"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1 1 -3\n1 2 3\n2 2 -3\n");

    let out = run(&["matrix-dump", "--dim", "1", "--n", "3", "--which", "A"]);
    assert_eq!(stdout(&out), "1 1 -18\n1 2 9\n2 1 9\n2 2 -18\n");
}

#[test]
fn matrix_dump_rejects_unknown_operator() {
    let out = run(&["matrix-dump", "--dim", "1", "--n", "3", "--which", "C"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("A or B"));
}

#[test]
fn unknown_flag_and_subcommand_exit_one() {
    let out = run(&["simulate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["extrapolate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("simulate"));
}

#[test]
fn validation_errors_name_the_field() {
    let out = run(&[
        "simulate", "--dim", "1", "--n", "4", "--dt", "0", "--t-end", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dt"));

    // above the stability ceiling without the override flag
    let out = run(&[
        "simulate", "--dim", "1", "--n", "10", "--dt", "0.01", "--t-end", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ceiling"));
}

#[test]
fn numerical_blow_up_exits_two() {
    // one overflowing explicit step past the (overridden) stability ceiling
    let out = run(&[
        "simulate",
        "--dim",
        "1",
        "--n",
        "4",
        "--dt",
        "1e308",
        "--t-end",
        "1e308",
        "--allow-cfl-violation",
        "--sigma",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("blow-up"));
}

#[test]
fn missing_required_field_is_reported() {
    let out = run(&["simulate", "--dim", "1", "--n", "4", "--dt", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("t_end"));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "dim=1\nn=4\ndt=1e-3\nt_end=0.002\nsigma=zero\n").unwrap();

    // file alone: n = 4 gives 3 nodes per snapshot
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout(&out);
    assert!(lines.contains("0 0 3 0.5"));
    assert!(!lines.contains("0 0 8 "));

    // flag overrides file: n = 9 gives 8 nodes
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--n", "9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 0 8 0.5"));
}

#[test]
fn empty_config_equals_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.conf");
    std::fs::write(&config, "# nothing here\n\n").unwrap();
    let flags = [
        "simulate", "--dim", "1", "--n", "4", "--dt", "1e-3", "--t-end", "0.002", "--sigma", "zero",
    ];
    let with_file = bin()
        .args(flags)
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    let without = run(&flags);
    assert_eq!(stdout(&with_file), stdout(&without));
}

#[test]
fn unknown_config_key_is_rejected_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "dim=1\nn=4\nwibble=3\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--dt",
        "1e-3",
        "--t-end",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let message = stderr(&out);
    assert!(message.contains("wibble"), "{message}");
    assert!(message.contains(":3"), "{message}");
}

#[test]
fn malformed_config_line_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "dim=1\nnot an assignment\n").unwrap();
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":2"));
}

#[test]
fn config_range_violation_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("zero-dt.conf");
    std::fs::write(&config, "dim=1\nn=4\ndt=0\nt_end=0.1\n").unwrap();
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dt"));
}

#[test]
fn kernel_check_l1_column_is_sub_probability() {
    let out = run(&["kernel-check", "--dim", "1", "--n", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows = 0;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("l1 ") {
            let value: f64 = rest.split_whitespace().nth(1).unwrap().parse().unwrap();
            assert!(value <= 1.0 + 1e-12, "L1 norm {value} above 1");
            assert!(value >= 0.0);
            rows += 1;
        }
    }
    assert_eq!(rows, 50);
    assert!(text.contains("bounds_hold yes"));
}

#[test]
fn simulate_writes_sidecar_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("traj.txt");
    let out = run(&[
        "simulate",
        "--dim",
        "1",
        "--n",
        "4",
        "--dt",
        "1e-3",
        "--t-end",
        "0.01",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let sidecar = Path::new(&format!("{}.meta", out_path.display())).to_path_buf();
    let meta = std::fs::read_to_string(sidecar).unwrap();
    for key in [
        "subcommand=simulate",
        "version=",
        "dim=1",
        "n=4",
        "seed=3",
        "fingerprint=",
        "jitter=",
        "clamp_total_steps=",
        "wall_time_ms=",
    ] {
        assert!(meta.contains(key), "sidecar missing {key}:\n{meta}");
    }
    let records = std::fs::read_to_string(&out_path).unwrap();
    assert!(records.starts_with("# replica t i value\n"));
    assert!(records.contains("\n0 0 1 0.5\n"));
}

#[test]
fn martingale_test_fail_exits_three() {
    // deterministic run with the transport term removed from the dynamics but
    // compensated in the statistic: M is a pure bias, so the test must FAIL
    let out = run(&[
        "martingale-test",
        "--dim",
        "1",
        "--n",
        "4",
        "--dt",
        "1e-3",
        "--t-end",
        "0.1",
        "--sigma",
        "zero",
        "--drift-mode",
        "laplacian-only",
        "--replicas",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stdout(&out).contains("RESULT FAIL"));
}

#[test]
fn martingale_test_pass_exits_zero() {
    let out = run(&[
        "martingale-test",
        "--dim",
        "1",
        "--n",
        "3",
        "--dt",
        "5e-4",
        "--t-end",
        "0.05",
        "--seed",
        "12",
        "--replicas",
        "150",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("RESULT PASS"));
}

#[test]
fn converge_runs_small_study() {
    let out = run(&[
        "converge",
        "--dim",
        "1",
        "--levels",
        "3,4",
        "--t-end",
        "0.05",
        "--replicas",
        "200",
        "--batches",
        "2",
        "--seed",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("batch 0 ks 3 4"));
    assert!(text.contains("median ks 3 4"));
    assert!(text.contains("RESULT PASS"));
}

#[test]
fn converge_rejects_bad_levels() {
    let out = run(&["converge", "--levels", "8,4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ascending"));
    let out = run(&["converge", "--levels", "4"]);
    assert_eq!(out.status.code(), Some(1));
}
