use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn attend(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attend")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_task_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let task = fixture("tasks/discrimination.toml");
    let o = attend(&["run-task", task.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["discrimination_fixations.csv", "discrimination_report.csv", "discrimination_trace.csv"]);
    let report = std::fs::read_to_string(dir.path().join("discrimination_report.csv")).unwrap();
    assert_eq!(report, stdout(&o));
    assert!(report.lines().nth(1).unwrap().contains(",true,,red_diag,true,"));
    let trace = std::fs::read_to_string(dir.path().join("discrimination_trace.csv")).unwrap();
    assert!(trace.starts_with("signal,kind,t_on,t_off,params\n"));
}

#[test]
fn malformed_program_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("bad.cp");
    std::fs::write(&cp, "cp w() {\n    wait(3)\n}\n").unwrap();
    let task = fixture("tasks/discrimination.toml");
    let o = attend(&["run-task", task.to_str().unwrap(), "--cp", cp.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("bad.cp:3:1:"), "{err}");
    // nothing but the program was written
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn missed_deadline_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(fixture("tasks/discrimination.toml")).unwrap();
    let task = dir.path().join("tight.toml");
    let text: String = src
        .lines()
        .map(|l| if l.starts_with("deadline_ms") { "deadline_ms = 1".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&task, text).unwrap();
    let o = attend(&["run-task", task.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("failure (deadline"), "{}", stdout(&o));
}

#[test]
fn unknown_subcommand_and_flag_are_usage_errors() {
    assert_eq!(attend(&["bogus"]).status.code(), Some(1));
    assert_eq!(attend(&["oracle", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(attend(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_table_and_filters() {
    let all = attend(&["oracle", "--format", "csv"]);
    assert_eq!(all.status.code(), Some(0));
    assert!(stdout(&all).lines().count() > 10);

    let one = stdout(&attend(&["oracle", "--filter", "2^1000", "--format", "csv"]));
    let rows: Vec<&str> = one.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ends_with(",match"), "{one}");

    let c = stdout(&attend(&["oracle", "--filter", "C(1000,6)", "--format", "csv"]));
    let rows: Vec<&str> = c.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ends_with(",flag"), "{c}");

    assert_eq!(attend(&["oracle", "--filter", "no such claim"]).status.code(), Some(1));
}

#[test]
fn trace_examples() {
    let task = fixture("tasks/discrimination.toml");
    let o = attend(&["trace", fixture("cp/discrimination.cp").to_str().unwrap(), task.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let pos = |name: &str| text.lines().position(|l| l.starts_with(&format!("{name},"))).unwrap();
    assert!(pos("prime") < pos("feedforward"));

    let dir = tempfile::tempdir().unwrap();
    let wait = dir.path().join("wait.cp");
    std::fs::write(&wait, "cp w() { wait(4); }").unwrap();
    let o = attend(&["trace", wait.to_str().unwrap(), task.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(stdout(&o), "signal,kind,t_on,t_off,params\nwait,II,0,4,n=4\n");

    let par = dir.path().join("par.cp");
    std::fs::write(&par, "cp p() { par { wait(2); } { wait(3); } }").unwrap();
    let o = attend(&["trace", par.to_str().unwrap(), task.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(stdout(&o), "signal,kind,t_on,t_off,params\nwait,II,0,2,n=2\nwait,II,0,3,n=3\n");
}

#[test]
fn suite_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let exp = fixture("experiments/cueing.toml");
    let mut outs = Vec::new();
    for i in 0..2 {
        let d = dir.path().join(i.to_string());
        let o = attend(&["run-suite", exp.to_str().unwrap(), "--trials", "4", "--seed", "9", "--out", d.to_str().unwrap(), "--format", "csv"]);
        assert_eq!(o.status.code(), Some(0));
        outs.push((
            std::fs::read(d.join("cueing_report.csv")).unwrap(),
            std::fs::read(d.join("cueing_report.json")).unwrap(),
        ));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn empty_suite_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("empty.toml");
    std::fs::write(&exp, "name = \"empty\"\ntrials = 3\n").unwrap();
    let o = attend(&["run-suite", exp.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runner_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = attend(&["runner", "--episodes", "5", "--length", "80", "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("runner.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(csv, stdout(&o));
}
