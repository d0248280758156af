use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use nasmcts::distributed::*;
use nasmcts::eval::{Evaluator, SyntheticOracle, TabularBenchmark};
use nasmcts::mcts::{Engine, SearchConfig, SurrogateConfig};
use nasmcts::space::{DagSpace, Space};

fn oracle() -> Arc<SyntheticOracle> {
    Arc::new(SyntheticOracle::new(DagSpace::new(4, 2), 3))
}

fn config(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        c: 1.0,
        k: 4,
        surrogate: SurrogateConfig {
            hidden: vec![8],
            retrain_every: 4,
            ..SurrogateConfig::default()
        },
        ..SearchConfig::default()
    }
}

fn engine(seed: u64) -> Engine {
    Engine::new(Space::dag(4, 2), config(seed)).unwrap()
}

fn fast_worker(id: &str) -> WorkerConfig {
    WorkerConfig {
        worker_id: id.into(),
        max_attempts: 40,
        initial_backoff: Duration::from_millis(10),
        max_backoff: Duration::from_millis(50),
    }
}

fn listen() -> (TcpListener, String) {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap().to_string();
    (l, addr)
}

fn synchronous(budget: usize) -> MasterConfig {
    MasterConfig {
        queue_bound: Some(1),
        idle_timeout: Some(Duration::from_secs(30)),
        ..MasterConfig::new(RunOptions::budget(budget), 1)
    }
}

#[test]
fn one_synchronous_worker_matches_sequential_run() {
    let eval = oracle();
    for seed in 0..3 {
        let mut seq = engine(seed);
        let seq_report = run_sequential(&mut seq, eval.as_ref(), &RunOptions::budget(20)).unwrap();

        let (listener, addr) = listen();
        let worker = spawn_local_worker(addr, eval.clone(), fast_worker("w"));
        let (dist, report) = master_loop(engine(seed), &synchronous(20), listener).unwrap();
        let stats = worker.join().unwrap().unwrap();
        assert_eq!(dist.dump(), seq.dump(), "seed {seed}");
        assert_eq!(report, seq_report);
        assert_eq!(stats.jobs, 20);
    }
}

#[test]
fn zero_budget_dispatches_nothing() {
    let (listener, _) = listen();
    let (engine, report) = master_loop(engine(0), &synchronous(0), listener).unwrap();
    assert_eq!(report.unique_evaluations, 0);
    assert_eq!(report.iterations, 0);
    assert_eq!(engine.pending_count(), 0);
}

#[test]
fn dead_worker_job_is_requeued() {
    let eval = oracle();
    let (listener, addr) = listen();
    let flaky_addr = addr.clone();
    let flaky = thread::spawn(move || {
        let mut s = TcpStream::connect(&flaky_addr).unwrap();
        s.write_all(b"{\"type\":\"hello\",\"worker_id\":\"flaky\",\"protocol_version\":1}\n").unwrap();
        let mut line = String::new();
        BufReader::new(s.try_clone().unwrap()).read_line(&mut line).unwrap();
        assert!(line.contains("job_assign"), "{line}");
        // Disconnect without answering.
    });
    let cfg = MasterConfig {
        idle_timeout: Some(Duration::from_secs(30)),
        ..MasterConfig::new(RunOptions::budget(15), 2)
    };
    let master = thread::spawn(move || master_loop(engine(4), &cfg, listener));
    flaky.join().unwrap();
    let good = spawn_local_worker(addr, eval.clone(), fast_worker("good"));
    let (engine, report) = master.join().unwrap().unwrap();
    good.join().unwrap().unwrap();
    assert_eq!(report.unique_evaluations, 15);
    assert_eq!(engine.pending_count(), 0);
    for record in engine.history() {
        assert_eq!(record.accuracy, eval.accuracy_of(&record.encoding).unwrap());
    }
}

#[test]
fn malformed_connection_is_dropped_and_run_continues() {
    let eval = oracle();
    let (listener, addr) = listen();
    let cfg = MasterConfig {
        idle_timeout: Some(Duration::from_secs(30)),
        ..MasterConfig::new(RunOptions::budget(10), 1)
    };
    let master = thread::spawn(move || master_loop(engine(1), &cfg, listener));
    let mut bad = TcpStream::connect(&addr).unwrap();
    bad.write_all(b"this is not json\n").unwrap();
    let good = spawn_local_worker(addr, eval, fast_worker("good"));
    let (_, report) = master.join().unwrap().unwrap();
    good.join().unwrap().unwrap();
    assert_eq!(report.unique_evaluations, 10);
}

#[test]
fn missing_table_entry_aborts_run() {
    // A table holding only the two-node graph.
    let text = "encoding,accuracy\n0-1-0-0-0-0-0-0-0-0-0-0-0-0-0-0-3-4-0-0,0.5\n";
    let table: Arc<dyn Evaluator> = Arc::new(TabularBenchmark::parse(text, Space::dag(4, 2), "tiny").unwrap());
    let (listener, addr) = listen();
    let worker = spawn_local_worker(addr, table, fast_worker("w"));
    let err = master_loop(engine(0), &synchronous(5), listener).unwrap_err();
    assert!(matches!(err, DistError::WorkerFailed { .. }), "{err}");
    let stats = worker.join().unwrap().unwrap();
    assert_eq!(stats.failed_jobs, 1);
}

#[test]
fn unreachable_master_exhausts_retries() {
    let (listener, addr) = listen();
    drop(listener);
    let cfg = WorkerConfig {
        max_attempts: 3,
        ..fast_worker("w")
    };
    let err = worker_loop(&addr, oracle().as_ref(), &cfg).unwrap_err();
    assert!(matches!(err, DistError::ConnectionFailed { attempts: 3, .. }));
}

#[test]
fn snapshot_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.snap");
    let mut e = engine(2);
    run_sequential(&mut e, oracle().as_ref(), &RunOptions::budget(12)).unwrap();
    save_snapshot(&e, &path).unwrap();
    assert_eq!(load_snapshot(&path).unwrap(), e);

    let text = std::fs::read_to_string(&path).unwrap();
    let bumped = text.replacen("nasmcts-snapshot 1", "nasmcts-snapshot 2", 1);
    assert!(matches!(decode_snapshot(&bumped), Err(SnapshotError::VersionMismatch { found: 2 })));
    let tampered = text.replacen("\"seed\"", "\"seee\"", 1);
    assert!(matches!(decode_snapshot(&tampered), Err(SnapshotError::Corrupt(_))));
    assert!(matches!(
        load_snapshot(&dir.path().join("missing")),
        Err(SnapshotError::Io { .. })
    ));
}

#[test]
fn resume_from_snapshot_matches_straight_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.snap");
    let eval = oracle();
    let straight_opts = RunOptions {
        budget: usize::MAX,
        max_iterations: Some(60),
        ..RunOptions::default()
    };
    let mut straight = engine(5);
    let straight_report = run_sequential(&mut straight, eval.as_ref(), &straight_opts).unwrap();

    let first = RunOptions {
        max_iterations: Some(30),
        snapshot_every: Some(30),
        snapshot_path: Some(path.clone()),
        ..straight_opts.clone()
    };
    let mut e = engine(5);
    run_sequential(&mut e, eval.as_ref(), &first).unwrap();
    let mut resumed = load_snapshot(&path).unwrap();
    assert_eq!(resumed, e);
    let report = run_sequential(&mut resumed, eval.as_ref(), &straight_opts).unwrap();
    assert_eq!(resumed.dump(), straight.dump());
    assert_eq!(encode_snapshot(&resumed), encode_snapshot(&straight));
    assert_eq!(report, straight_report);
}
