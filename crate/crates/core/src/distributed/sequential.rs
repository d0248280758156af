use std::path::PathBuf;

use log::debug;
use serde::{Deserialize, Serialize};

use super::snapshot::save_snapshot;
use super::DistError;
use crate::eval::{CostLedger, Evaluator};
use crate::mcts::{Engine, Resolution};
use crate::space::EncodedArch;

/// Stop and snapshot settings shared by the sequential runner and the
/// master.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Unique evaluations to perform.
    pub budget: usize,
    /// Stop as soon as an accuracy of at least this value is seen.
    pub target: Option<f64>,
    /// Total iteration cap, counted across resumes.
    pub max_iterations: Option<u64>,
    pub snapshot_every: Option<u64>,
    pub snapshot_path: Option<PathBuf>,
}

impl RunOptions {
    pub fn budget(budget: usize) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    pub(crate) fn iteration_cap(&self) -> u64 {
        self.max_iterations
            .unwrap_or_else(|| crate::harness::default_max_steps(self.budget))
    }

    pub(crate) fn target_reached(&self, engine: &Engine) -> bool {
        match (self.target, engine.best()) {
            (Some(t), Some((_, best))) => best >= t,
            _ => false,
        }
    }

    pub(crate) fn maybe_snapshot(&self, engine: &Engine) -> Result<(), DistError> {
        if let (Some(every), Some(path)) = (self.snapshot_every, &self.snapshot_path) {
            if every > 0 && engine.iterations() % every == 0 {
                debug!("snapshot at iteration {}", engine.iterations());
                save_snapshot(engine, path)?;
            }
        }
        Ok(())
    }
}

/// What a finished run reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: u64,
    pub unique_evaluations: usize,
    pub best_encoding: Option<EncodedArch>,
    pub best_accuracy: Option<f64>,
    /// Unique evaluations needed to reach the target, if it was reached.
    pub samples_to_target: Option<usize>,
    pub ledger: CostLedger,
}

impl RunReport {
    pub fn from_engine(engine: &Engine, target: Option<f64>) -> Self {
        let best = engine.best();
        let samples_to_target = target.and_then(|t| engine.history().iter().position(|r| r.accuracy >= t).map(|i| i + 1));
        Self {
            iterations: engine.iterations(),
            unique_evaluations: engine.unique_evaluations(),
            best_encoding: best.map(|b| b.0.clone()),
            best_accuracy: best.map(|b| b.1),
            samples_to_target,
            ledger: engine.ledger(),
        }
    }
}

/// Runs the search in-process, evaluating each job as soon as it is issued.
/// Resuming a restored engine continues exactly where the snapshot left off.
pub fn run_sequential(engine: &mut Engine, evaluator: &dyn Evaluator, opts: &RunOptions) -> Result<RunReport, DistError> {
    let cap = opts.iteration_cap();
    while engine.unique_evaluations() < opts.budget && !opts.target_reached(engine) && engine.iterations() < cap {
        if let Resolution::Dispatched(job) = engine.iterate()?.resolution {
            let acc = evaluator.accuracy(&job.arch)?;
            engine.apply_result(job.job_id, acc)?;
        }
        opts.maybe_snapshot(engine)?;
    }
    Ok(RunReport::from_engine(engine, opts.target))
}
