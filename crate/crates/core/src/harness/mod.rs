//! Experiment runner: repeated seeded trials of every algorithm,
//! samples-to-target statistics and report files.

mod report;
mod stats;
mod trace;

pub use report::{
    boxplot_svg, emit_report, progression_svg, summarize, summary_csv, trials_csv, AlgorithmSummary, BenchReport, Comparison,
    ReportFormats,
};
pub use stats::{mann_whitney_less, median, quartiles};
pub use trace::{default_max_steps, Recorder, StopRule, TraceEvent, TrialTrace};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{self, BaselineConfig, BaselineError};
use crate::eval::{EvalError, Evaluator};
use crate::hash::fnv1a64;
use crate::mcts::{Engine, MctsError, Resolution, SearchConfig, SurrogateConfig};
use crate::surrogate::TrainConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Search(#[from] MctsError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// The evaluator error at the root of this failure, if any.
    pub fn eval_error(&self) -> Option<&EvalError> {
        match self {
            HarnessError::Eval(e) => Some(e),
            HarnessError::Search(MctsError::Eval(e)) => Some(e),
            HarnessError::Baseline(BaselineError::Eval(e)) => Some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Tree search with the surrogate.
    Mcts,
    /// Tree search without the surrogate.
    MctsNoMeta,
    RandomSearch,
    RegularizedEvolution,
    HillClimb,
    QLearning,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Mcts,
        Algorithm::MctsNoMeta,
        Algorithm::RandomSearch,
        Algorithm::RegularizedEvolution,
        Algorithm::HillClimb,
        Algorithm::QLearning,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Mcts => "mcts",
            Algorithm::MctsNoMeta => "mcts-nm",
            Algorithm::RandomSearch => "rs",
            Algorithm::RegularizedEvolution => "re",
            Algorithm::HillClimb => "hc",
            Algorithm::QLearning => "ql",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Parameters shared by every trial of a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    /// Template for the tree search; the seed is replaced per trial.
    pub search: SearchConfig,
    pub baselines: BaselineConfig,
    pub stop: StopRule,
}

impl TrialSettings {
    /// Settings tuned for benchmarks on small synthetic spaces: a tree that
    /// stops growing at depth 2 (random rollouts finish the build), c = 0.15, a
    /// narrow surrogate retrained every ten results, and default baselines.
    pub fn desk_scale(stop: StopRule) -> Self {
        Self {
            search: SearchConfig {
                c: 0.15,
                k: 10,
                max_tree_depth: Some(2),
                surrogate: SurrogateConfig {
                    hidden: vec![32],
                    retrain_every: 10,
                    train: TrainConfig {
                        learning_rate: 1e-3,
                        epochs: 5,
                        ..TrainConfig::default()
                    },
                    ..SurrogateConfig::default()
                },
                ..SearchConfig::default()
            },
            baselines: BaselineConfig::default(),
            stop,
        }
    }

    /// Short stable hash of the settings as used by `algorithm`.
    pub fn config_hash(&self, algorithm: Algorithm) -> String {
        let json = serde_json::to_string(&(algorithm, self)).expect("settings serialize");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }
}

/// Runs one seeded trial of `algorithm`.
pub fn run_trial(
    algorithm: Algorithm,
    evaluator: &dyn Evaluator,
    settings: &TrialSettings,
    seed: u64,
) -> Result<TrialTrace, HarnessError> {
    let stop = settings.stop;
    let b = &settings.baselines;
    let mut trace = match algorithm {
        Algorithm::Mcts | Algorithm::MctsNoMeta => {
            let mut cfg = settings.search.clone();
            cfg.seed = seed;
            cfg.meta_dnn_enabled = algorithm == Algorithm::Mcts;
            run_mcts_trial(evaluator, cfg, stop)?
        }
        Algorithm::RandomSearch => baselines::random_search(evaluator, stop, seed)?,
        Algorithm::RegularizedEvolution => baselines::regularized_evolution(evaluator, &b.evolution, stop, seed)?,
        Algorithm::HillClimb => baselines::hill_climb(evaluator, &b.hill_climb, stop, seed)?,
        Algorithm::QLearning => baselines::q_learning(evaluator, &b.q_learning, stop, seed)?,
    };
    trace.algorithm = algorithm.tag().to_string();
    trace.seed = seed;
    trace.config_hash = settings.config_hash(algorithm);
    Ok(trace)
}

fn run_mcts_trial(evaluator: &dyn Evaluator, cfg: SearchConfig, stop: StopRule) -> Result<TrialTrace, HarnessError> {
    let seed = cfg.seed;
    let mut engine = Engine::new(evaluator.space().clone(), cfg)?;
    let mut rec = Recorder::new(evaluator, stop);
    while !rec.done() {
        rec.step();
        if let Resolution::Dispatched(job) = engine.iterate()?.resolution {
            let acc = evaluator.accuracy(&job.arch)?;
            rec.record(job.encoding, acc, job.parent_encoding.is_some());
            engine.apply_result(job.job_id, acc)?;
        }
    }
    Ok(rec.finish("mcts", seed, ""))
}

/// Runs `trials` trials with seeds `base_seed..base_seed + trials` on up to
/// `jobs` threads; traces come back in seed order.
pub fn run_trials(
    algorithm: Algorithm,
    evaluator: &dyn Evaluator,
    settings: &TrialSettings,
    trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<Vec<TrialTrace>, HarnessError> {
    let seeds: Vec<u64> = (0..trials as u64).map(|i| base_seed + i).collect();
    if jobs <= 1 {
        return seeds.iter().map(|&s| run_trial(algorithm, evaluator, settings, s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_trial(algorithm, evaluator, settings, s))
            .collect()
    })
}
