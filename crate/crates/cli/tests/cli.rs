use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

fn nasmcts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nasmcts"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn free_port() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    l.local_addr().unwrap().to_string()
}

const SMALL: [&str; 6] = ["--max-nodes", "4", "--ops", "2", "--evaluator", "synthetic:3"];

fn export_table(dir: &Path) -> String {
    let csv = dir.join("table.csv");
    let out = nasmcts(&[
        "enumerate",
        "--max-nodes",
        "4",
        "--ops",
        "2",
        "--evaluator",
        "synthetic:3",
        "--export",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    csv.to_str().unwrap().to_string()
}

#[test]
fn enumerate_counts_and_exports() {
    let out = nasmcts(&["enumerate", "--max-nodes", "3", "--ops", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("3 architectures"), "{}", stdout(&out));

    let dir = tempfile::tempdir().unwrap();
    let csv = export_table(dir.path());
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("encoding,accuracy"));
    assert_eq!(text.lines().count(), 46);
}

#[test]
fn search_reports_json_and_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let mut args = vec!["search", "--c", "1", "--budget", "12", "--hidden", "8"];
    args.extend(SMALL);
    args.extend(["--out", out_dir.to_str().unwrap()]);
    let out = nasmcts(&args);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["unique_evaluations"], 12);
    let tree = std::fs::read_to_string(out_dir.join("tree.tsv")).unwrap();
    assert!(tree.starts_with("node_id\tparent_id\taction\tq_sum\tvisits\tencoding\n"));
}

#[test]
fn snapshot_resume_continues_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("s.snap");
    let snap = snap.to_str().unwrap();
    let mut first = vec!["search", "--c", "1", "--budget", "100", "--max-iterations", "20", "--hidden", "8"];
    first.extend(SMALL);
    first.extend(["--snapshot-every", "10", "--snapshot", snap]);
    assert!(nasmcts(&first).status.success());

    let mut resume = vec!["search", "--c", "1", "--budget", "100", "--max-iterations", "40"];
    resume.extend(SMALL);
    resume.extend(["--resume", snap]);
    let resumed = nasmcts(&resume);
    assert!(resumed.status.success(), "{resumed:?}");

    let mut straight = vec!["search", "--c", "1", "--budget", "100", "--max-iterations", "40", "--hidden", "8"];
    straight.extend(SMALL);
    assert_eq!(stdout(&resumed), stdout(&nasmcts(&straight)));
}

#[test]
fn exit_codes_by_failure_class() {
    // Bad evaluator spec: usage error.
    let out = nasmcts(&["search", "--c", "1", "--evaluator", "oracle"]);
    assert_eq!(out.status.code(), Some(2));
    // The synthetic evaluator covers only the DAG domain.
    let out = nasmcts(&["search", "--c", "1", "--space", "cell"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    // A table for a smaller space lacks most architectures of this one.
    let small = dir.path().join("small.csv");
    std::fs::write(&small, "encoding,accuracy\n0-1-0-0-0-0-0-0-0-0-0-0-0-0-0-0-3-4-0-0,0.5\n").unwrap();
    let spec = format!("tabular:{}", small.display());
    let out = nasmcts(&["search", "--c", "1", "--max-nodes", "4", "--ops", "2", "--budget", "5", "--evaluator", &spec]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    let out = nasmcts(&["worker", "--connect", &free_port(), "--max-attempts", "1"]);
    assert_eq!(out.status.code(), Some(4));

    let bad = dir.path().join("bad.snap");
    std::fs::write(&bad, "nasmcts-snapshot 9\n{}\nsha256 00\n").unwrap();
    let out = nasmcts(&["search", "--c", "1", "--resume", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn serve_with_local_worker() {
    let mut args = vec!["serve", "--listen", "127.0.0.1:0", "--local-workers", "2", "--idle-timeout", "30"];
    args.extend(["--c", "1", "--budget", "10", "--hidden", "8"]);
    args.extend(SMALL);
    let out = nasmcts(&args);
    assert!(out.status.success(), "{out:?}");
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["unique_evaluations"], 10);
}

#[test]
fn serve_and_separate_worker_process() {
    let addr = free_port();
    let mut args = vec!["serve", "--listen", &addr, "--idle-timeout", "30", "--c", "1", "--budget", "8", "--hidden", "8"];
    args.extend(SMALL);
    let master = Command::new(env!("CARGO_BIN_EXE_nasmcts"))
        .args(&args)
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut worker = vec!["worker", "--connect", &addr, "--max-attempts", "50"];
    worker.extend(SMALL);
    let w = nasmcts(&worker);
    let m = master.wait_with_output().unwrap();
    assert!(m.status.success(), "{m:?}");
    assert!(w.status.success(), "{w:?}");
}

#[test]
fn bench_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let mut args = vec!["bench", "--algos", "rs,mcts-nm,hc", "--trials", "3", "--svg"];
    args.extend(SMALL);
    args.extend(["--out-dir", out_dir.to_str().unwrap()]);
    let out = nasmcts(&args);
    assert!(out.status.success(), "{out:?}");
    for f in ["trials.csv", "summary.csv", "progression.svg", "boxplot.svg", "meta.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn surrogate_study_reports_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let csv = export_table(dir.path());
    let report = dir.path().join("r.json");
    let out = nasmcts(&[
        "surrogate",
        "--train",
        &csv,
        "--max-nodes",
        "4",
        "--ops",
        "2",
        "--hidden",
        "16",
        "--epochs",
        "50",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["train_size"], 36);
    assert_eq!(json["holdout_size"], 9);
}
