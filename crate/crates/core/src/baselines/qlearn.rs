use std::collections::HashMap;

use rand::Rng;

use super::{BaselineError, QLearningConfig};
use crate::eval::Evaluator;
use crate::harness::{Recorder, StopRule, TrialTrace};
use crate::rng::RunRng;
use crate::space::{estimated_space_size, Action, EncodedArch, Space, SpaceError, DEFAULT_ENUMERATION_CAP};

type QTable = HashMap<(EncodedArch, Action), f64>;

fn q_value(table: &QTable, state: &EncodedArch, action: &Action, init: f64) -> f64 {
    table.get(&(state.clone(), action.clone())).copied().unwrap_or(init)
}

/// Tabular epsilon-greedy Q-learning over the construction process.
///
/// Each episode builds one architecture from the root. Only `Terminate`
/// earns a reward: the accuracy of a complete architecture, 0 otherwise.
pub fn q_learning(
    evaluator: &dyn Evaluator,
    cfg: &QLearningConfig,
    stop: StopRule,
    seed: u64,
) -> Result<TrialTrace, BaselineError> {
    learn(evaluator, cfg, stop, seed).map(|(trace, _)| trace)
}

fn learn(
    evaluator: &dyn Evaluator,
    cfg: &QLearningConfig,
    stop: StopRule,
    seed: u64,
) -> Result<(TrialTrace, QTable), BaselineError> {
    let space = evaluator.space().clone();
    let estimated = match &space {
        Space::Dag(d) => estimated_space_size(d),
        Space::Cell(_) => u128::MAX,
    };
    if estimated > DEFAULT_ENUMERATION_CAP {
        return Err(SpaceError::SpaceTooLarge {
            estimated,
            cap: DEFAULT_ENUMERATION_CAP,
        }
        .into());
    }
    let depth_cap = space.max_actions() + 1;
    let mut rng = RunRng::new(seed);
    let mut rec = Recorder::new(evaluator, stop);
    let mut table = QTable::new();
    while !rec.done() {
        rec.step();
        let mut state = space.root();
        for depth in 0.. {
            let key = space.encode(&state.arch);
            let actions = space.actions(&state);
            let action = if depth >= depth_cap {
                Action::Terminate
            } else if rng.gen::<f64>() < cfg.epsilon {
                actions[rng.gen_range(0..actions.len())].clone()
            } else {
                greedy(&table, &key, &actions, cfg.q_init, &mut rng)
            };
            let old = q_value(&table, &key, &action, cfg.q_init);
            if action == Action::Terminate {
                let reward = if space.is_complete(&state.arch) {
                    rec.evaluate(&state.arch)?
                } else {
                    0.0
                };
                table.insert((key, action), old + cfg.alpha * (reward - old));
                break;
            }
            let next = space.apply(&state, &action)?;
            let next_key = space.encode(&next.arch);
            let future = space
                .actions(&next)
                .iter()
                .map(|a| q_value(&table, &next_key, a, cfg.q_init))
                .fold(f64::NEG_INFINITY, f64::max);
            table.insert((key, action), old + cfg.alpha * (cfg.gamma * future - old));
            state = next;
        }
    }
    Ok((rec.finish("ql", seed, ""), table))
}

fn greedy<R: Rng + ?Sized>(table: &QTable, key: &EncodedArch, actions: &[Action], init: f64, rng: &mut R) -> Action {
    let values: Vec<f64> = actions.iter().map(|a| q_value(table, key, a, init)).collect();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best: Vec<usize> = (0..actions.len()).filter(|&i| values[i] == max).collect();
    actions[best[rng.gen_range(0..best.len())]].clone()
}
