use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;
use nasmcts::eval::Evaluator;
use nasmcts::harness::TrialSettings;
use nasmcts::mcts::{SearchConfig, SurrogateConfig};
use nasmcts::space::Space;
use nasmcts::surrogate::{TrainConfig, DEFAULT_HIDDEN};
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "nasmcts", version, about = "Surrogate-assisted Monte Carlo tree search over architecture spaces")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run one search in this process.
    Search(SearchFlags),
    /// Repeated seeded trials of several algorithms with a samples-to-target report.
    Bench(BenchArgs),
    /// Run the search as a master serving jobs to workers over TCP.
    Serve(ServeArgs),
    /// Evaluate jobs for a master.
    Worker(WorkerArgs),
    /// Count (and optionally export) every architecture of a DAG space.
    Enumerate(EnumerateArgs),
    /// Train a surrogate on a table and report correlations.
    Surrogate(SurrogateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceKind {
    Dag,
    Cell,
}

#[derive(Clone, Debug)]
pub enum EvaluatorSpec {
    Synthetic(u64),
    Tabular(PathBuf),
}

impl FromStr for EvaluatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("synthetic", seed)) => seed
                .parse()
                .map(EvaluatorSpec::Synthetic)
                .map_err(|_| format!("bad synthetic seed {seed:?}")),
            Some(("tabular", path)) if !path.is_empty() => Ok(EvaluatorSpec::Tabular(path.into())),
            _ => Err(format!("expected synthetic:<seed> or tabular:<path>, got {s:?}")),
        }
    }
}

#[derive(Args, Clone)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value = "dag")]
    pub space: SpaceKind,
    /// Node limit of the DAG space, INPUT and OUTPUT included.
    #[arg(long, default_value_t = 5)]
    pub max_nodes: usize,
    /// Number of intermediate op types of the DAG space.
    #[arg(long, default_value_t = 3)]
    pub ops: u8,
    /// synthetic:<seed> or tabular:<path>.
    #[arg(long, default_value = "synthetic:0")]
    pub evaluator: EvaluatorSpec,
}

impl SpaceArgs {
    pub fn space(&self) -> Result<Space, CliError> {
        let space = match self.space {
            SpaceKind::Dag => Space::dag(self.max_nodes, self.ops),
            SpaceKind::Cell => Space::cell(),
        };
        space.check()?;
        Ok(space)
    }

    pub fn evaluator(&self, space: &Space) -> Result<Arc<dyn Evaluator>, CliError> {
        self.evaluator.build(space)
    }
}

fn parse_widths(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|_| CliError::Config(format!("bad width {w:?}"))))
        .collect()
}

#[derive(Args, Clone)]
pub struct SearchFlags {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Unique evaluations to perform.
    #[arg(long, default_value_t = 100)]
    pub budget: usize,
    /// Exploration constant.
    #[arg(long)]
    pub c: f64,
    /// Surrogate-scored rollouts per iteration.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Disable the surrogate (ablation).
    #[arg(long)]
    pub no_meta_dnn: bool,
    /// Stop once this accuracy is reached.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub max_tree_depth: Option<usize>,
    /// Surrogate hidden widths, comma separated.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Retrain the surrogate after this many results.
    #[arg(long, default_value_t = 1)]
    pub retrain_every: usize,
    /// Use the multi-stage surrogate.
    #[arg(long)]
    pub multi_stage: bool,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    /// Snapshot file written every --snapshot-every iterations.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Continue from a snapshot file.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Directory for report.json and tree.tsv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SearchFlags {
    pub fn search_config(&self) -> Result<SearchConfig, CliError> {
        if self.snapshot_every.is_some() != self.snapshot.is_some() {
            return Err(CliError::Config("--snapshot-every and --snapshot go together".into()));
        }
        let hidden = match &self.hidden {
            Some(h) => parse_widths(h)?,
            None => DEFAULT_HIDDEN.to_vec(),
        };
        let cfg = SearchConfig {
            c: self.c,
            k: self.k,
            seed: self.seed,
            meta_dnn_enabled: !self.no_meta_dnn,
            max_tree_depth: self.max_tree_depth,
            surrogate: SurrogateConfig {
                hidden,
                multi_stage: self.multi_stage,
                retrain_every: self.retrain_every,
                ..SurrogateConfig::default()
            },
            ..SearchConfig::default()
        };
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct ServeArgs {
    /// Address to listen on, host:port.
    #[arg(long)]
    pub listen: String,
    /// Workers expected; sizes the default job-queue bound.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub queue_bound: Option<usize>,
    /// Also run this many workers inside the master process.
    #[arg(long, default_value_t = 0)]
    pub local_workers: usize,
    /// Abort when no worker message arrives for this many seconds.
    #[arg(long)]
    pub idle_timeout: Option<u64>,
    #[command(flatten)]
    pub search: SearchFlags,
}

#[derive(Args)]
pub struct WorkerArgs {
    /// Master address, host:port.
    #[arg(long)]
    pub connect: String,
    #[arg(long)]
    pub worker_id: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub max_attempts: u32,
    #[command(flatten)]
    pub space: SpaceArgs,
}

#[derive(Args)]
pub struct EnumerateArgs {
    #[arg(long, default_value_t = 5)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub ops: u8,
    /// Write every architecture with its accuracy to this CSV file.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Evaluator that labels exported rows.
    #[arg(long, default_value = "synthetic:0")]
    pub evaluator: EvaluatorSpec,
    /// Keep one representative per isomorphism class.
    #[arg(long)]
    pub dedup_isomorphic: bool,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Comma-separated algorithms: mcts, mcts-nm, rs, re, hc, ql.
    #[arg(long, default_value = "mcts,mcts-nm,rs,re")]
    pub algos: String,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// auto (the known optimum), none, or an accuracy.
    #[arg(long, default_value = "auto")]
    pub target: String,
    /// Accuracy slack when matching the target (noisy tables).
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    /// Unique evaluations per trial; defaults to the size of the space.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Search steps per trial before giving up.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Algorithm the speedups are measured against.
    #[arg(long, default_value = "rs")]
    pub baseline: String,
    /// Parallel trials.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_tree_depth: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write progression.svg and boxplot.svg.
    #[arg(long)]
    pub svg: bool,
}

impl BenchArgs {
    pub fn apply_overrides(&self, settings: &mut TrialSettings) {
        if let Some(c) = self.c {
            settings.search.c = c;
        }
        if let Some(k) = self.k {
            settings.search.k = k;
        }
        if let Some(d) = self.max_tree_depth {
            settings.search.max_tree_depth = Some(d);
        }
    }
}

#[derive(Args)]
pub struct SurrogateArgs {
    /// Table to train on (encoding,accuracy CSV).
    #[arg(long)]
    pub train: PathBuf,
    /// Share of rows held out for scoring.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long)]
    pub multi_stage: bool,
    /// Write the correlation report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "64,128,64")]
    pub hidden: String,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub space: SpaceArgs,
}

impl SurrogateArgs {
    pub fn hidden_widths(&self) -> Result<Vec<usize>, CliError> {
        parse_widths(&self.hidden)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            ..TrainConfig::default()
        }
    }
}
