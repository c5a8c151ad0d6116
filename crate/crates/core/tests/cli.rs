use std::fs;
use std::process::Command;

fn kansa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kansa"))
}

#[test]
fn run_writes_trial_and_summary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trials.csv");
    let status = kansa()
        .args(["run", "--problem", "2", "--family", "RP", "--k", "5"])
        .args(["--grid_sizes", "5,7", "--deltas", "0.01,0", "--trials", "3", "--seed", "4"])
        .arg("--output")
        .arg(&out)
        .arg("--no-timestamp")
        .status()
        .unwrap();
    assert!(status.success());

    let trials = fs::read_to_string(&out).unwrap();
    let mut lines = trials.lines();
    assert_eq!(lines.next().unwrap(), "problem,family,k,N,delta,trial,rmse,rcond,status");
    assert_eq!(lines.count(), 2 * 2 * 3);

    let summary = fs::read_to_string(dir.path().join("trials_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(
        rows[0],
        "problem,family,k,N,delta,mean_rmse,singular_count,nearsingular_count"
    );
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[1].starts_with("2,RP,5,25,0.01,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("from_config.csv");
    fs::write(
        &cfg,
        format!(
            "problem = 1\nfamily = \"TPS\"\nk = 6\ngrid_sizes = [5]\ndeltas = [0.001]\ntrials = 2\nseed = 9\noutput = {:?}\n",
            out.display().to_string()
        ),
    )
    .unwrap();
    let status = kansa()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .args(["--trials", "4", "--no-timestamp"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.lines().nth(1).unwrap().starts_with("1,TPS,6,25,0.001,1,"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = kansa()
            .args(["run", "--grid_sizes", "6", "--deltas", "0.05", "--trials", "5", "--no-timestamp"])
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn timestamp_line_is_on_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let status = kansa()
        .args(["run", "--grid_sizes", "4", "--deltas", "0", "--trials", "1"])
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out).unwrap();
    assert!(text.starts_with("# generated_at_unix="));
}

#[test]
fn census_reports_no_singular_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("census.csv");
    let output = kansa()
        .args(["census", "--family", "RP", "--k", "3", "--grid_sizes", "11"])
        .args(["--deltas", "0.05", "--trials", "50", "--no-timestamp"])
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("50 trials: 0 singular"), "{stdout}");
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "problem,family,k,N,delta,trial,rcond,status");
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn check_subcommand_passes() {
    let output = kansa().args(["check", "--pairs", "20"]).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 20);
}

#[test]
fn configuration_errors_exit_nonzero() {
    for args in [
        vec!["run", "--family", "TPS", "--k", "5"],
        vec!["run", "--problem", "3"],
        vec!["run", "--grid_sizes", "2"],
        vec!["run", "--trials", "0"],
        vec!["census", "--deltas", "-0.1"],
        vec!["run", "--config", "/nonexistent/config.toml"],
    ] {
        let status = kansa().args(&args).status().unwrap();
        assert!(!status.success(), "{args:?} should fail");
    }
}
