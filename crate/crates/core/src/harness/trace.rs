use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::eval::{CostModel, EvalError, Evaluator};
use crate::space::{Architecture, EncodedArch};

/// One unique evaluation within a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// 1-based count of unique evaluations.
    pub index: usize,
    pub encoding: EncodedArch,
    pub accuracy: f64,
    pub best_so_far: f64,
    pub cumulative_cost_epochs: u64,
}

/// Everything one seeded search run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub algorithm: String,
    pub seed: u64,
    pub config_hash: String,
    pub events: Vec<TraceEvent>,
    /// Index of the first event reaching the target.
    pub samples_to_target: Option<usize>,
    /// Search steps spent (iterations, rollouts or mutations, by algorithm).
    pub steps: u64,
}

/// When a trial stops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Maximum unique evaluations.
    pub budget: usize,
    /// Stop once an accuracy of at least `target - tolerance` is seen.
    pub target: Option<f64>,
    pub tolerance: f64,
    /// Hard cap on search steps, so a search that keeps re-sampling known
    /// architectures still ends.
    pub max_steps: u64,
}

impl StopRule {
    pub fn budget(budget: usize) -> Self {
        Self {
            budget,
            target: None,
            tolerance: 0.0,
            max_steps: default_max_steps(budget),
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn reaches_target(&self, accuracy: f64) -> bool {
        self.target.is_some_and(|t| accuracy >= t - self.tolerance)
    }
}

pub fn default_max_steps(budget: usize) -> u64 {
    (budget as u64).saturating_mul(1000).max(10_000)
}

/// Budget-aware evaluation cache that turns unique evaluations into trace
/// events.
pub struct Recorder<'a> {
    evaluator: &'a dyn Evaluator,
    stop: StopRule,
    cost: CostModel,
    cache: HashMap<EncodedArch, f64>,
    events: Vec<TraceEvent>,
    best: f64,
    cost_total: u64,
    samples_to_target: Option<usize>,
    steps: u64,
}

impl<'a> Recorder<'a> {
    pub fn new(evaluator: &'a dyn Evaluator, stop: StopRule) -> Self {
        Self {
            evaluator,
            stop,
            cost: CostModel::default(),
            cache: HashMap::new(),
            events: Vec::new(),
            best: f64::NEG_INFINITY,
            cost_total: 0,
            samples_to_target: None,
            steps: 0,
        }
    }

    pub fn evaluator(&self) -> &dyn Evaluator {
        self.evaluator
    }

    /// True once the budget, the target or the step cap is reached.
    pub fn done(&self) -> bool {
        self.events.len() >= self.stop.budget || self.samples_to_target.is_some() || self.steps >= self.stop.max_steps
    }

    /// Counts one search step.
    pub fn step(&mut self) {
        self.steps += 1;
    }

    pub fn unique(&self) -> usize {
        self.events.len()
    }

    pub fn cached(&self, encoding: &EncodedArch) -> Option<f64> {
        self.cache.get(encoding).copied()
    }

    /// Accuracy of a complete architecture, evaluating it if new.
    pub fn evaluate(&mut self, arch: &Architecture) -> Result<f64, EvalError> {
        let encoding = self.evaluator.space().encode(arch);
        if let Some(acc) = self.cache.get(&encoding) {
            return Ok(*acc);
        }
        let acc = self.evaluator.accuracy(arch)?;
        self.record(encoding, acc, false);
        Ok(acc)
    }

    /// Records an evaluation performed elsewhere.
    pub fn record(&mut self, encoding: EncodedArch, accuracy: f64, from_transfer: bool) {
        self.cache.insert(encoding.clone(), accuracy);
        self.best = self.best.max(accuracy);
        self.cost_total += u64::from(self.cost.epochs(from_transfer));
        let index = self.events.len() + 1;
        if self.samples_to_target.is_none() && self.stop.reaches_target(accuracy) {
            self.samples_to_target = Some(index);
        }
        self.events.push(TraceEvent {
            index,
            encoding,
            accuracy,
            best_so_far: self.best,
            cumulative_cost_epochs: self.cost_total,
        });
    }

    pub fn finish(self, algorithm: &str, seed: u64, config_hash: &str) -> TrialTrace {
        TrialTrace {
            algorithm: algorithm.to_string(),
            seed,
            config_hash: config_hash.to_string(),
            events: self.events,
            samples_to_target: self.samples_to_target,
            steps: self.steps,
        }
    }
}
