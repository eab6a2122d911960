//! End-to-end runs of the compiled binary: exit codes, output shapes,
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

use ddic::fixtures::{make_counterexample, make_erasure_example, CounterexampleKind};
use ddic::io::save_channel_spec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

/// Writes `{"T": [...]}` family JSON for the given matrices.
fn write_family(path: &Path, members: &[ddic::ChannelMatrix]) {
    let t: Vec<Vec<Vec<f64>>> = members
        .iter()
        .map(|m| (0..m.n_out()).map(|i| m.row(i).to_vec()).collect())
        .collect();
    std::fs::write(path, serde_json::json!({ "T": t }).to_string()).unwrap();
}

#[test]
fn check_passes_on_the_examples() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["check", "--example", "1", "--s", "3", "--p1", "0.7,0.2,0.1", "--p2", "0.5,0.3,0.2"],
        vec!["check", "--example", "2", "--p", "0.1", "--alpha", "0.3"],
        vec!["check", "--example", "3", "--abc", "0.5,0.3,0.2", "--def", "0.25,0.15,0.10"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "args = {args:?}");
        let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        assert_eq!(report["all_passed"], true);
    }
}

#[test]
fn check_exits_2_on_a_failing_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let d = make_counterexample(CounterexampleKind::NonSymmetricTprime).unwrap();
    save_channel_spec(&path, &d).unwrap();

    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["all_passed"], false);
    assert_eq!(report["condition1"]["status"], "fail");
}

#[test]
fn usage_and_io_failures_exit_1() {
    assert_eq!(run(&["check", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--example", "7"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--example", "1", "--s", "2"]).status.code(), Some(1));
    assert_eq!(run(&["region", "--bogus-flag"]).status.code(), Some(1));
    assert_eq!(run(&["not-a-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn region_exits_2_when_conditions_fail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let d = make_counterexample(CounterexampleKind::BrokenCond4).unwrap();
    save_channel_spec(&path, &d).unwrap();
    let out = run(&["region", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn group_prints_cycle_notation() {
    let out = run(&["group", "--example", "1", "--s", "3", "--p1", "0.7,0.2,0.1", "--p2", "0.5,0.3,0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("order: 3"));
    assert!(text.contains("transitive: true"));
    assert!(text.contains("(0 1 2)"));
    assert!(text.contains("(0 2 1)"));
}

#[test]
fn region_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = [
        "region", "--example", "1", "--s", "2", "--p1", "0.9,0.1", "--p2", "0.8,0.2",
        "--simplex-res", "60", "--bins", "60", "--c-grid", "11", "--out",
    ];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.push(a.to_str().unwrap());
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.push(b.to_str().unwrap());
    assert_eq!(run(&args_a).status.code(), Some(0));
    assert_eq!(run(&args_b).status.code(), Some(0));
    let bytes_a = std::fs::read(&a).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
}

#[test]
fn degrade_recovers_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let d = make_erasure_example(0.1, 0.3).unwrap();
    let front = dir.path().join("front.json");
    let composed = dir.path().join("composed.json");
    write_family(&front, d.family());
    let members: Vec<ddic::ChannelMatrix> = (0..d.x2_size())
        .map(|x2| d.y2_channel(x2).unwrap())
        .collect();
    write_family(&composed, &members);

    let out = run(&["degrade", front.to_str().unwrap(), composed.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    assert!(text.starts_with("feasible"));
    // Degrading further cannot be undone: the reversed direction fails.
    let out = run(&["degrade", composed.to_str().unwrap(), front.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sim_emits_one_row_per_blocklength() {
    let out = run(&[
        "sim", "--example", "1", "--s", "2", "--p1", "0.9,0.1", "--p2", "0.8,0.2",
        "--r1", "0.2", "--r2", "0.1", "--n", "2,4", "--trials", "50", "--px1", "0.2,0.8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    let data_rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('n'))
        .collect();
    assert_eq!(data_rows.len(), 2);
    assert!(text.contains("n,R1,R2,err1,ci1,err2,ci2"));
    assert!(data_rows[0].starts_with("2,"));
    assert!(data_rows[1].starts_with("4,"));
}

#[test]
fn outer_runs_are_byte_identical_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = [
        "outer", "--example", "1", "--s", "2", "--p1", "0.9,0.1", "--p2", "0.8,0.2",
        "--grid", "3", "--restarts", "2", "--simplex-res", "60", "--bins", "60", "--out",
    ];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.push(a.to_str().unwrap());
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.push(b.to_str().unwrap());
    assert_eq!(run(&args_a).status.code(), Some(0));
    assert_eq!(run(&args_b).status.code(), Some(0));
    let text = String::from_utf8(std::fs::read(&a).unwrap()).unwrap();
    assert!(text.contains("c,T_hat,bound,slack"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
