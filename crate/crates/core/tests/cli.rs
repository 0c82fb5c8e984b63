use std::io::Cursor;
use std::path::{Path, PathBuf};

use adaptive_dose::cli::{dispatch, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

fn scenario_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/paper.cfg")
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], stdin: &str) -> Outcome {
    let mut argv = vec!["adaptive-dose"];
    argv.extend_from_slice(args);
    let mut input = Cursor::new(stdin.as_bytes().to_vec());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dispatch(argv, &mut input, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

#[test]
fn run_writes_trace_and_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = scenario_cfg();
    let o = run(
        &["run", "--config", cfg.to_str().unwrap(), "--design", "adaptive", "--seed", "42", "--out-dir", out_dir.to_str().unwrap()],
        "",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 13);
    assert!(out_dir.join("posterior.csv").exists());
    assert!(!out_dir.join("plot.svg").exists());
    assert!(o.stdout.contains("estimated optimum"));
}

#[test]
fn bogus_design_is_a_usage_error() {
    let cfg = scenario_cfg();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--design", "bogus", "--out-dir", "x"], "");
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.stderr.contains("possible values: adaptive, fixed"));
}

#[test]
fn missing_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["run", "--config", "/nonexistent/paper.cfg", "--out-dir", dir.path().to_str().unwrap()],
        "",
    );
    assert_eq!(o.code, EXIT_RUNTIME);
}

#[test]
fn plot_rerenders_the_run_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path();
    let cfg = scenario_cfg();
    let o = run(
        &["run", "--config", cfg.to_str().unwrap(), "--design", "fixed", "--out-dir", out_dir.to_str().unwrap(), "--svg"],
        "",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let original = std::fs::read(out_dir.join("plot.svg")).unwrap();
    let replot = out_dir.join("replot.svg");
    let o = run(
        &["plot", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(), "--out", replot.to_str().unwrap()],
        "",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(std::fs::read(replot).unwrap(), original);
}

#[test]
fn live_transcript_is_machine_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.cfg");
    let text = std::fs::read_to_string(scenario_cfg()).unwrap().replace("budget = 12", "budget = 3");
    std::fs::write(&cfg_path, text).unwrap();
    let snapshot = dir.path().join("live.state");

    let o = run(
        &["live", "--config", cfg_path.to_str().unwrap(), "--seed", "5", "--out", snapshot.to_str().unwrap()],
        "1.2\nnot-a-number\nNaN\n1.4\n",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let prompts: Vec<&str> = o.stdout.lines().filter(|l| l.starts_with("t=")).collect();
    // Two rejected lines repeat the t=2 prompt.
    assert_eq!(prompts.len(), 5, "{}", o.stdout);
    assert!(prompts[0].starts_with("t=1 recommend x="));
    assert!(prompts[1].starts_with("t=2 recommend x="));
    assert_eq!(prompts[2], prompts[1]);
    assert_eq!(prompts[3], prompts[1]);
    assert!(prompts[4].starts_with("t=3 recommend x="));
    assert_eq!(o.stdout.lines().filter(|l| l.starts_with("recorded y=")).count(), 2);
    assert!(o.stderr.contains("not a finite number"));
    assert!(o.stdout.contains("suspended at t=3"));

    // Resume from the snapshot and finish the trial.
    let o = run(&["live", "--config", snapshot.to_str().unwrap()], "1.7\n");
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert_eq!(o.stdout.lines().next().unwrap(), prompts[4]);
    assert!(o.stdout.contains("recorded y=1.7"));
    assert!(o.stdout.contains("trial complete after 3 observations"));
}

#[test]
fn compare_writes_aggregate_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let cfg = scenario_cfg();
    let o = run(
        &["compare", "--config", cfg.to_str().unwrap(), "--seeds", "4", "--checkpoints", "6,12", "--out", out.to_str().unwrap()],
        "",
    );
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 2 * 2);
    assert!(text.contains("# win_rate,mean_sigma,6,12,"));

    let o = run(
        &["compare", "--config", cfg.to_str().unwrap(), "--checkpoints", "6,x", "--out", "r.csv"],
        "",
    );
    assert_eq!(o.code, EXIT_USAGE);
}
