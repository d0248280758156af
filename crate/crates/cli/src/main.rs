//! Command-line front end: single searches, benchmarks, master/worker
//! processes, space enumeration and surrogate studies.

mod args;
mod error;

use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;
use log::info;

use args::{BenchArgs, Cli, Command, EnumerateArgs, SearchFlags, ServeArgs, SurrogateArgs, WorkerArgs};
use error::CliError;
use nasmcts::distributed::{
    load_snapshot, master_loop, run_sequential, spawn_local_worker, worker_loop, MasterConfig, RunOptions, RunReport,
    WorkerConfig,
};
use nasmcts::eval::{export_tabular, Evaluator, TabularBenchmark};
use nasmcts::harness::{emit_report, run_trials, summarize, Algorithm, ReportFormats, StopRule, TrialSettings};
use nasmcts::mcts::Engine;
use nasmcts::rng::RunRng;
use nasmcts::space::{enumerate_space, Architecture, DagSpace, EnumerateOptions, Space};
use nasmcts::surrogate::{holdout_study, Surrogate, TrainSample, DEFAULT_BINS};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Search(a) => search(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
        Command::Worker(a) => worker(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Surrogate(a) => surrogate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// A fresh engine, or the restored one when `--resume` is given.
fn start_engine(flags: &SearchFlags, space: &Space) -> Result<Engine, CliError> {
    match &flags.resume {
        Some(path) => {
            let engine = load_snapshot(path)?;
            if engine.space() != space {
                return Err(CliError::Config("snapshot was taken on a different space".into()));
            }
            info!("resumed at iteration {}", engine.iterations());
            Ok(engine)
        }
        None => Ok(Engine::new(space.clone(), flags.search_config()?)?),
    }
}

fn finish_search(flags: &SearchFlags, engine: &Engine, report: &RunReport) -> Result<(), CliError> {
    let json = to_json(report);
    print!("{json}");
    if let Some(dir) = &flags.out {
        write_file(&dir.join("report.json"), &json)?;
        write_file(&dir.join("tree.tsv"), &engine.dump())?;
    }
    Ok(())
}

fn search(args: SearchFlags) -> Result<(), CliError> {
    let space = args.space.space()?;
    let evaluator = args.space.evaluator(&space)?;
    let mut engine = start_engine(&args, &space)?;
    let report = run_sequential(&mut engine, evaluator.as_ref(), &args.run_options())?;
    finish_search(&args, &engine, &report)
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let space = args.search.space.space()?;
    let engine = start_engine(&args.search, &space)?;
    let listener = TcpListener::bind(&args.listen).map_err(|e| CliError::Config(format!("{}: {e}", args.listen)))?;
    let addr = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
    eprintln!("listening on {addr}");
    let mut local = Vec::new();
    if args.local_workers > 0 {
        let evaluator = args.search.space.evaluator(&space)?;
        for i in 0..args.local_workers {
            let cfg = WorkerConfig {
                worker_id: format!("local-{i}"),
                ..WorkerConfig::default()
            };
            local.push(spawn_local_worker(addr.to_string(), evaluator.clone(), cfg));
        }
    }
    let cfg = MasterConfig {
        run: args.search.run_options(),
        workers: args.workers.max(args.local_workers).max(1),
        queue_bound: args.queue_bound,
        idle_timeout: args.idle_timeout.map(Duration::from_secs),
    };
    let (engine, report) = master_loop(engine, &cfg, listener)?;
    for handle in local {
        let _ = handle.join();
    }
    finish_search(&args.search, &engine, &report)
}

fn worker(args: WorkerArgs) -> Result<(), CliError> {
    let space = args.space.space()?;
    let evaluator = args.space.evaluator(&space)?;
    let mut cfg = WorkerConfig {
        max_attempts: args.max_attempts,
        ..WorkerConfig::default()
    };
    if let Some(id) = args.worker_id {
        cfg.worker_id = id;
    }
    let stats = worker_loop(&args.connect, evaluator.as_ref(), &cfg)?;
    info!("worker finished: {stats:?}");
    Ok(())
}

fn enumerate(args: EnumerateArgs) -> Result<(), CliError> {
    let dag = DagSpace::new(args.max_nodes, args.ops);
    let opts = EnumerateOptions {
        dedup_isomorphic: args.dedup_isomorphic,
        ..EnumerateOptions::default()
    };
    let archs: Vec<_> = enumerate_space(&dag, &opts)?.collect();
    println!("{} architectures", archs.len());
    if let Some(path) = &args.export {
        let space = Space::Dag(dag.clone());
        let evaluator = args.evaluator.build(&space)?;
        let n = export_tabular(path, evaluator.as_ref(), archs.into_iter().map(Architecture::Dag))?;
        println!("wrote {n} rows to {}", path.display());
        if let Some((enc, acc)) = evaluator.optimum()? {
            println!("optimum {enc} {acc:.6}");
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let space = args.space.space()?;
    let evaluator = args.space.evaluator(&space)?;
    let algos = args.algorithms()?;
    let target = args.target_value(evaluator.as_ref())?;
    let budget = match args.budget {
        Some(b) => b,
        None => match &space {
            Space::Dag(d) => enumerate_space(d, &EnumerateOptions::default())?.count(),
            Space::Cell(_) => return Err(CliError::Config("--budget is required for the cell space".into())),
        },
    };
    let mut stop = StopRule::budget(budget);
    stop.target = target;
    stop.tolerance = args.tolerance;
    if let Some(steps) = args.max_steps {
        stop.max_steps = steps;
    }
    let mut settings = TrialSettings::desk_scale(stop);
    args.apply_overrides(&mut settings);
    let started = Instant::now();
    let mut traces = Vec::new();
    for algo in &algos {
        let t0 = Instant::now();
        let mut runs = run_trials(*algo, evaluator.as_ref(), &settings, args.trials, args.base_seed, args.jobs)?;
        eprintln!("{algo}: {} trials in {:.1}s", runs.len(), t0.elapsed().as_secs_f64());
        traces.append(&mut runs);
    }
    let baseline = algos
        .iter()
        .map(|a| a.tag())
        .find(|t| *t == args.baseline)
        .map(str::to_string);
    let report = summarize(&traces, baseline.as_deref());
    for s in &report.algorithms {
        println!(
            "{:<8} trials {:>4} reached {:>4} q1 {:>8} median {:>8} q3 {:>8}",
            s.algorithm, s.trials, s.reached, s.q1, s.median, s.q3
        );
    }
    for c in &report.comparisons {
        let speedup = c.speedup.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!("{} vs {}: speedup {speedup} p {:.3e}", c.algorithm, c.baseline, c.p_value);
    }
    if let Some(dir) = &args.out_dir {
        let mut formats = ReportFormats {
            svg: args.svg,
            baseline,
            ..ReportFormats::default()
        };
        formats.meta.insert("wall_time_secs".into(), started.elapsed().as_secs_f64().into());
        formats.meta.insert("target".into(), serde_json::to_value(target).expect("target"));
        formats.meta.insert("settings".into(), serde_json::to_value(&settings).expect("settings"));
        emit_report(&traces, dir, &formats)?;
    }
    Ok(())
}

fn surrogate(args: SurrogateArgs) -> Result<(), CliError> {
    let space = args.space.space()?;
    let table = TabularBenchmark::load(&args.train, space.clone())?;
    let rows: Vec<TrainSample> = table.rows().into_iter().map(|(x, y)| TrainSample { x, y }).collect();
    let mut rng = RunRng::new(args.seed);
    let hidden = args.hidden_widths()?;
    let init = args.train_config().init_range;
    let mut model = if args.multi_stage {
        Surrogate::multi_stage(space.encoding_len(), &hidden, space.max_digit(), DEFAULT_BINS, init, &mut rng)?
    } else {
        Surrogate::mlp(space.encoding_len(), &hidden, space.max_digit(), init, &mut rng)?
    };
    let report = holdout_study(&mut model, &rows, args.holdout, &args.train_config(), &mut rng)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "train {} rows: pearson {} spearman {}",
        report.train_size,
        fmt(report.train_pearson),
        fmt(report.train_spearman)
    );
    println!(
        "holdout {} rows: pearson {} spearman {}",
        report.holdout_size,
        fmt(report.holdout_pearson),
        fmt(report.holdout_spearman)
    );
    if let Some(path) = &args.report {
        write_file(path, &to_json(&report))?;
    }
    Ok(())
}

impl SearchFlags {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            budget: self.budget,
            target: self.target,
            max_iterations: self.max_iterations,
            snapshot_every: self.snapshot_every,
            snapshot_path: self.snapshot.clone(),
        }
    }
}

impl args::EvaluatorSpec {
    fn build(&self, space: &Space) -> Result<Arc<dyn Evaluator>, CliError> {
        use nasmcts::eval::SyntheticOracle;
        match (self, space) {
            (args::EvaluatorSpec::Synthetic(seed), Space::Dag(d)) => Ok(Arc::new(SyntheticOracle::new(d.clone(), *seed))),
            (args::EvaluatorSpec::Synthetic(_), Space::Cell(_)) => {
                Err(CliError::Config("the synthetic evaluator only covers the dag space".into()))
            }
            (args::EvaluatorSpec::Tabular(path), _) => Ok(Arc::new(TabularBenchmark::load(path, space.clone())?)),
        }
    }
}

impl BenchArgs {
    fn target_value(&self, evaluator: &dyn Evaluator) -> Result<Option<f64>, CliError> {
        match self.target.as_str() {
            "auto" => match evaluator.optimum()? {
                Some((_, acc)) => Ok(Some(acc)),
                None => Err(CliError::Config("optimum unknown; pass --target <float>".into())),
            },
            "none" => Ok(None),
            other => other
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("bad --target {other:?}"))),
        }
    }

    fn algorithms(&self) -> Result<Vec<Algorithm>, CliError> {
        self.algos
            .split(',')
            .map(|a| a.parse::<Algorithm>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }
}
