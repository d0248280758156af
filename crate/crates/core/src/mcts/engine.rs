use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rollout::{simulate, DEFAULT_ROLLOUT_RETRIES};
use super::tree::{NodeId, SearchTree};
use super::{corrective_delta, MctsError};
use crate::eval::{find_transfer_parent, CostLedger, CostModel};
use crate::rng::RunRng;
use crate::space::{Architecture, EncodedArch, Space, State};
use crate::surrogate::{Surrogate, TrainConfig, TrainSample, DEFAULT_BINS, DEFAULT_HIDDEN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub multi_stage: bool,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    /// Retrain after this many new results.
    pub retrain_every: usize,
    /// Reinitialise the parameters before each retrain instead of fine-tuning.
    pub from_scratch: bool,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            multi_stage: false,
            hidden: DEFAULT_HIDDEN.to_vec(),
            train: TrainConfig::default(),
            retrain_every: 1,
            from_scratch: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Exploration constant.
    pub c: f64,
    /// Surrogate-scored rollouts per iteration.
    pub k: usize,
    /// Deepest tree level selection descends to; `None` means the longest
    /// possible build plus one, which never binds.
    pub max_tree_depth: Option<usize>,
    pub seed: u64,
    pub meta_dnn_enabled: bool,
    pub rollout_retries: usize,
    /// Propagate the prediction at selection time and the correction later.
    /// When false the full reward is propagated once, when the result is known.
    pub split_backprop: bool,
    pub surrogate: SurrogateConfig,
    pub cost: CostModel,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c: 0.5,
            k: 10,
            max_tree_depth: None,
            seed: 0,
            meta_dnn_enabled: true,
            rollout_retries: DEFAULT_ROLLOUT_RETRIES,
            split_backprop: true,
            surrogate: SurrogateConfig::default(),
            cost: CostModel::default(),
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<(), MctsError> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(MctsError::InvalidConfig(format!("c must be finite and >= 0, got {}", self.c)));
        }
        if self.meta_dnn_enabled && self.k == 0 {
            return Err(MctsError::InvalidConfig("k must be positive when the surrogate is enabled".into()));
        }
        if self.max_tree_depth == Some(0) {
            return Err(MctsError::InvalidConfig("max_tree_depth must be positive".into()));
        }
        if self.surrogate.retrain_every == 0 || self.surrogate.hidden.iter().any(|&h| h == 0) {
            return Err(MctsError::InvalidConfig("bad surrogate settings".into()));
        }
        self.surrogate.train.check()?;
        Ok(())
    }

    pub fn depth_cap(&self, space: &Space) -> usize {
        self.max_tree_depth.unwrap_or(space.max_actions() + 1)
    }

    /// Surrogate-scored rollouts actually run per iteration.
    pub fn effective_k(&self) -> usize {
        if self.meta_dnn_enabled {
            self.k
        } else {
            0
        }
    }
}

/// One iteration's rollout and its (eventual) reward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    /// Terminal architecture of rollout 0; `None` when no complete terminal
    /// was found.
    pub sampled_arch: Option<EncodedArch>,
    pub rollout_from: NodeId,
    pub predicted_mean: f64,
    pub true_accuracy: Option<f64>,
}

/// An evaluation the engine is waiting for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingJob {
    pub job_id: u64,
    pub encoding: EncodedArch,
    pub arch: Architecture,
    pub parent_encoding: Option<EncodedArch>,
    /// Every outcome whose rollout 0 produced this architecture.
    pub outcomes: Vec<SimulationOutcome>,
}

/// Work to hand to an evaluator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub job_id: u64,
    pub encoding: EncodedArch,
    pub arch: Architecture,
    pub parent_encoding: Option<EncodedArch>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Resolution {
    /// A new evaluation job was created.
    Dispatched(JobRequest),
    /// The architecture was already evaluated; the reward was applied.
    Cached,
    /// The architecture is being evaluated by an earlier job.
    Attached(u64),
    /// No complete terminal was reachable; reward 0 was applied.
    NoValidTerminal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationOutcome {
    pub outcome: SimulationOutcome,
    pub resolution: Resolution,
}

/// One unique evaluation, in the order results were applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub job_id: u64,
    pub encoding: EncodedArch,
    pub accuracy: f64,
    pub cost_epochs: u32,
    pub from_transfer: bool,
    /// Iterations completed when the result was applied.
    pub iteration: u64,
}

/// The single owner of the search tree, surrogate and random stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    space: Space,
    config: SearchConfig,
    tree: SearchTree,
    surrogate: Option<Surrogate>,
    rng: RunRng,
    pending: BTreeMap<u64, PendingJob>,
    in_flight: BTreeMap<EncodedArch, u64>,
    evaluated: BTreeMap<EncodedArch, f64>,
    buffer: Vec<TrainSample>,
    since_retrain: usize,
    next_job_id: u64,
    iterations: u64,
    history: Vec<EvalRecord>,
}

impl Engine {
    pub fn new(space: Space, config: SearchConfig) -> Result<Self, MctsError> {
        space.check()?;
        config.check()?;
        let mut rng = RunRng::new(config.seed);
        let surrogate = if config.meta_dnn_enabled {
            let s = &config.surrogate;
            let dim = space.encoding_len();
            let range = s.train.init_range;
            Some(if s.multi_stage {
                Surrogate::multi_stage(dim, &s.hidden, space.max_digit(), DEFAULT_BINS, range, &mut rng)?
            } else {
                Surrogate::mlp(dim, &s.hidden, space.max_digit(), range, &mut rng)?
            })
        } else {
            None
        };
        Ok(Self {
            tree: SearchTree::new(&space),
            space,
            config,
            surrogate,
            rng,
            pending: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            evaluated: BTreeMap::new(),
            buffer: Vec::new(),
            since_retrain: 0,
            next_job_id: 1,
            iterations: 0,
            history: Vec::new(),
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    pub fn surrogate(&self) -> Option<&Surrogate> {
        self.surrogate.as_ref()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn history(&self) -> &[EvalRecord] {
        &self.history
    }

    pub fn unique_evaluations(&self) -> usize {
        self.history.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingJob> {
        self.pending.values()
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn is_evaluated(&self, encoding: &EncodedArch) -> bool {
        self.evaluated.contains_key(encoding)
    }

    pub fn training_buffer(&self) -> &[TrainSample] {
        &self.buffer
    }

    pub fn rng(&self) -> &RunRng {
        &self.rng
    }

    /// Best evaluated architecture so far (earliest on ties).
    pub fn best(&self) -> Option<(&EncodedArch, f64)> {
        let mut best: Option<&EvalRecord> = None;
        for r in &self.history {
            if best.map_or(true, |b| r.accuracy > b.accuracy) {
                best = Some(r);
            }
        }
        best.map(|r| (&r.encoding, r.accuracy))
    }

    pub fn ledger(&self) -> CostLedger {
        let mut ledger = CostLedger::default();
        for r in &self.history {
            ledger.record(r.from_transfer, &self.config.cost);
        }
        ledger
    }

    pub fn dump(&self) -> String {
        self.tree.dump()
    }

    fn rollout(&mut self, state: &State) -> Result<State, MctsError> {
        let depth = self.space.max_actions() + 1;
        simulate(&self.space, state, depth, self.config.rollout_retries, &mut self.rng)
    }

    /// Select, expand, simulate and backpropagate the prediction.
    pub fn iterate(&mut self) -> Result<IterationOutcome, MctsError> {
        let path = self.tree.select_within(self.config.c, self.config.depth_cap(&self.space));
        let &(node, edge) = path
            .last()
            .ok_or_else(|| MctsError::InvalidConfig("root has no actions".into()))?;
        let leaf = match self.tree.node(node).edges[edge].child {
            Some(child) => child,
            None => self.tree.expand(&self.space, node, edge)?,
        };
        let leaf_state = self.tree.node(leaf).state.clone();
        let sample = match self.rollout(&leaf_state) {
            Ok(s) => Some(s),
            Err(MctsError::NoValidTerminal) => None,
            Err(e) => return Err(e),
        };

        let k = self.config.effective_k();
        let mut predicted_mean = 0.0;
        if k > 0 {
            let mut total = 0.0;
            if leaf_state.terminal {
                // Every rollout from a terminal state returns the state itself.
                if let Some(s) = &sample {
                    let enc = self.space.encode(&s.arch);
                    let surrogate = self.surrogate.as_ref().expect("surrogate exists when k > 0");
                    total = surrogate.predict(&enc)? * k as f64;
                }
            }
            for _ in 0..if leaf_state.terminal { 0 } else { k } {
                match self.rollout(&leaf_state) {
                    Ok(s) => {
                        let enc = self.space.encode(&s.arch);
                        let surrogate = self.surrogate.as_ref().expect("surrogate exists when k > 0");
                        total += surrogate.predict(&enc)?;
                    }
                    Err(MctsError::NoValidTerminal) => {}
                    Err(e) => return Err(e),
                }
            }
            predicted_mean = total / k as f64;
        }
        if self.config.split_backprop {
            self.tree.backpropagate(leaf, predicted_mean, 1);
        }
        self.iterations += 1;

        let mut outcome = SimulationOutcome {
            sampled_arch: sample.as_ref().map(|s| self.space.encode(&s.arch)),
            rollout_from: leaf,
            predicted_mean,
            true_accuracy: None,
        };
        let resolution = match (&sample, outcome.sampled_arch.clone()) {
            (Some(state), Some(encoding)) => {
                if let Some(&acc) = self.evaluated.get(&encoding) {
                    outcome.true_accuracy = Some(acc);
                    self.resolve(&outcome, acc);
                    Resolution::Cached
                } else if let Some(&job_id) = self.in_flight.get(&encoding) {
                    self.pending
                        .get_mut(&job_id)
                        .expect("in-flight job is pending")
                        .outcomes
                        .push(outcome.clone());
                    Resolution::Attached(job_id)
                } else {
                    let parent_encoding =
                        find_transfer_parent(&self.tree, leaf, &encoding, |e| self.evaluated.contains_key(e))
                            .map(|(e, _)| e);
                    let job_id = self.next_job_id;
                    self.next_job_id += 1;
                    let job = PendingJob {
                        job_id,
                        encoding: encoding.clone(),
                        arch: state.arch.clone(),
                        parent_encoding: parent_encoding.clone(),
                        outcomes: vec![outcome.clone()],
                    };
                    self.pending.insert(job_id, job);
                    self.in_flight.insert(encoding.clone(), job_id);
                    Resolution::Dispatched(JobRequest {
                        job_id,
                        encoding,
                        arch: state.arch.clone(),
                        parent_encoding,
                    })
                }
            }
            _ => {
                outcome.true_accuracy = Some(0.0);
                self.resolve(&outcome, 0.0);
                Resolution::NoValidTerminal
            }
        };
        Ok(IterationOutcome { outcome, resolution })
    }

    /// Applies the reward of one outcome to the path above its rollout node.
    fn resolve(&mut self, outcome: &SimulationOutcome, acc: f64) {
        let meta = self.config.meta_dnn_enabled;
        if self.config.split_backprop {
            let delta = corrective_delta(acc, outcome.predicted_mean, meta);
            self.tree.backpropagate(outcome.rollout_from, delta, 0);
        } else {
            let q = if meta { (acc + outcome.predicted_mean) / 2.0 } else { acc };
            self.tree.backpropagate(outcome.rollout_from, q, 1);
        }
    }

    /// Applies a job's true accuracy to every outcome waiting on it, records
    /// the evaluation and retrains the surrogate when due.
    pub fn apply_result(&mut self, job_id: u64, accuracy: f64) -> Result<Vec<SimulationOutcome>, MctsError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(MctsError::InvalidConfig(format!("accuracy {accuracy} outside [0, 1]")));
        }
        let job = self.pending.remove(&job_id).ok_or(MctsError::UnknownOutcome(job_id))?;
        self.in_flight.remove(&job.encoding);
        let mut applied = Vec::with_capacity(job.outcomes.len());
        for mut outcome in job.outcomes {
            self.resolve(&outcome, accuracy);
            outcome.true_accuracy = Some(accuracy);
            applied.push(outcome);
        }
        let from_transfer = job.parent_encoding.is_some();
        self.evaluated.insert(job.encoding.clone(), accuracy);
        self.history.push(EvalRecord {
            job_id,
            encoding: job.encoding.clone(),
            accuracy,
            cost_epochs: self.config.cost.epochs(from_transfer),
            from_transfer,
            iteration: self.iterations,
        });
        if self.surrogate.is_some() {
            self.buffer.push(TrainSample {
                x: job.encoding,
                y: accuracy,
            });
            self.since_retrain += 1;
            if self.since_retrain >= self.config.surrogate.retrain_every {
                self.retrain()?;
            }
        }
        Ok(applied)
    }

    fn retrain(&mut self) -> Result<(), MctsError> {
        self.since_retrain = 0;
        let cfg = &self.config.surrogate;
        let Some(model) = self.surrogate.as_mut() else {
            return Ok(());
        };
        if cfg.from_scratch {
            *model = model.reinitialized(cfg.train.init_range, &mut self.rng)?;
        }
        model.train(&self.buffer, &cfg.train, &mut self.rng)?;
        Ok(())
    }
}
