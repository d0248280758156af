//! Reference search algorithms sharing the space and evaluator contracts of
//! the tree search: random search, regularized evolution, hill climbing and
//! tabular Q-learning. All of them count their budget in unique evaluated
//! architectures.

mod evolution;
mod hill;
mod mutation;
mod qlearn;
mod random;

pub use evolution::regularized_evolution;
pub use hill::{hill_climb, neighbors};
pub use mutation::mutate;
pub use qlearn::q_learning;
pub use random::random_search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvalError;
use crate::space::SpaceError;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid baseline configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub tournament_size: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 500,
            tournament_size: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QLearningConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub q_init: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            alpha: 0.2,
            gamma: 1.0,
            q_init: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    /// Restart from a fresh random architecture when a move would revisit a
    /// state; without it the climb stops there.
    pub restart_on_revisit: bool,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        Self {
            restart_on_revisit: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub evolution: EvolutionConfig,
    pub q_learning: QLearningConfig,
    pub hill_climb: HillClimbConfig,
}

impl BaselineConfig {
    pub fn check(&self) -> Result<(), BaselineError> {
        let e = &self.evolution;
        if e.population_size == 0 || e.tournament_size == 0 || e.tournament_size > e.population_size {
            return Err(BaselineError::InvalidConfig(format!(
                "tournament {} must be in 1..=population {}",
                e.tournament_size, e.population_size
            )));
        }
        let q = &self.q_learning;
        let unit = 0.0..=1.0;
        if !unit.contains(&q.epsilon) || !unit.contains(&q.alpha) || !unit.contains(&q.gamma) || !q.q_init.is_finite() {
            return Err(BaselineError::InvalidConfig(format!("bad Q-learning settings {q:?}")));
        }
        Ok(())
    }
}
