//! Monte Carlo tree search with a surrogate-assisted reward.
//!
//! Each iteration selects a path with UCB1, expands one child, runs `k + 1`
//! random rollouts from it, and immediately backpropagates the mean surrogate
//! prediction `q̂` over rollouts `1..=k` with one visit (the *preemptive*
//! pass). Rollout 0 is evaluated for real; when its accuracy arrives the
//! *corrective* pass propagates `(acc - q̂) / 2` without touching visit
//! counts, so the edge ends up holding `q = (acc + q̂) / 2`.

mod engine;
mod rollout;
mod tree;

pub use engine::{
    Engine, EvalRecord, IterationOutcome, JobRequest, PendingJob, Resolution, SearchConfig,
    SimulationOutcome, SurrogateConfig,
};
pub use rollout::{random_terminal, simulate, DEFAULT_ROLLOUT_RETRIES};
pub use tree::{EdgeStats, Node, NodeId, SearchTree};

use thiserror::Error;

use crate::eval::EvalError;
use crate::space::SpaceError;
use crate::surrogate::SurrogateError;

#[derive(Debug, Error)]
pub enum MctsError {
    #[error("edge {action} of node {node} is already expanded")]
    AlreadyExpanded { node: NodeId, action: usize },
    #[error("hybrid reward needs at least one prediction")]
    EmptyPredictions,
    #[error("no pending outcome for job {0}")]
    UnknownOutcome(u64),
    #[error("rollout found no complete terminal architecture")]
    NoValidTerminal,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// UCB1 priority of one edge; unvisited edges rank first.
pub fn ucb_score(q_sum: f64, visits: u64, parent_visits: u64, c: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    let exploration = if parent_visits <= 1 {
        0.0
    } else {
        2.0 * c * (2.0 * (parent_visits as f64).ln() / n).sqrt()
    };
    q_sum / n + exploration
}

/// Reward mixing a true accuracy with the mean of surrogate predictions.
pub fn hybrid_q(true_acc: f64, predictions: &[f64]) -> Result<f64, MctsError> {
    if predictions.is_empty() {
        return Err(MctsError::EmptyPredictions);
    }
    let mean = predictions.iter().sum::<f64>() / predictions.len() as f64;
    Ok((true_acc + mean) / 2.0)
}

/// Amount the corrective pass adds to every edge on the path.
///
/// With the surrogate disabled the preemptive pass carried 0 and the full
/// accuracy is the reward.
pub fn corrective_delta(true_acc: f64, predicted_mean: f64, meta_dnn_enabled: bool) -> f64 {
    if meta_dnn_enabled {
        (true_acc - predicted_mean) / 2.0
    } else {
        true_acc
    }
}
