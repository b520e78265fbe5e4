use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_closedloop"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["bench", "--help"]).status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(run(&["bench", "--level", "9"]).status.code(), Some(2));
    assert_eq!(run(&["episode", "--feedback", "maybe", "--instruction", "x"]).status.code(), Some(2));
    assert_eq!(run(&["bench"]).status.code(), Some(2));
    assert_eq!(run(&["episode", "--backend", "scripted", "--instruction", "x"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--suite", "/nonexistent/suite.json"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--level", "1", "--grasp-fail", "2"]).status.code(), Some(2));
}

#[test]
fn episode_exit_reflects_verdict() {
    let ok = run(&["episode", "--instruction", "find lemon and put it on the drink table"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("#feedback: place success"));
    let budget = run(&["episode", "--level", "2", "--task", "0", "--max-steps", "3"]);
    assert_eq!(budget.status.code(), Some(1));
    assert!(stdout(&budget).contains("step_budget_exhausted"));
}

#[test]
fn scripted_episode_replays_fixture() {
    let o = run(&[
        "episode",
        "--backend",
        "scripted",
        "--script",
        "fixtures/gather_episode.json",
        "--instruction",
        "gather a bottle of water, a toy duck and a persimmon to shipping table",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("#feedback: place success").count(), 3);
}

#[test]
fn bench_writes_outputs_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["bench", "--level", "1", "--out", out, "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("episode-009.jsonl").exists());
    assert!(dir.path().join("report.json").exists());
    let r = run(&["report", "--out", out, "--json"]);
    assert_eq!(r.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["runs"][0]["episodes"], 10);
    let b = run(&["report", "--out", out, "--baselines"]);
    assert!(stdout(&b).contains("RoboFlamingo"));
}

#[test]
fn bench_exits_zero_even_when_episodes_fail() {
    let o = run(&["bench", "--perturb", "on", "--feedback", "off"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("perturbation"));
}

#[test]
fn repl_reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_closedloop"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"find lemon and put it on the storage rack\nfind lemon and put it on the shipping table\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches("verdict: success").count(), 2);
    assert!(text.contains("memory: "));
}
