use rand::Rng;

use super::MctsError;
use crate::space::{Space, State};

/// Re-rolls allowed when a rollout terminates on an incomplete architecture.
pub const DEFAULT_ROLLOUT_RETRIES: usize = 16;

/// Uniform random rollout from `state` to a complete terminal state.
///
/// Every legal action, `Terminate` included, is equally likely at each step;
/// after `max_depth` steps `Terminate` is forced. Incomplete terminals are
/// re-rolled up to `retries` times.
pub fn simulate<R: Rng + ?Sized>(
    space: &Space,
    state: &State,
    max_depth: usize,
    retries: usize,
    rng: &mut R,
) -> Result<State, MctsError> {
    if state.terminal {
        return if space.is_complete(&state.arch) {
            Ok(state.clone())
        } else {
            Err(MctsError::NoValidTerminal)
        };
    }
    let mut growth = Vec::new();
    for _ in 0..=retries {
        let mut arch = state.arch.clone();
        for _ in 0..max_depth {
            growth.clear();
            space.push_growth_actions(&arch, &mut growth);
            let pick = rng.gen_range(0..=growth.len());
            if pick == 0 {
                break;
            }
            arch = space
                .apply_unchecked(&State { arch, terminal: false }, &growth[pick - 1])
                .arch;
        }
        if space.is_complete(&arch) {
            return Ok(State { arch, terminal: true });
        }
    }
    Err(MctsError::NoValidTerminal)
}

/// Rollout from the root of `space`, the sampler shared by the baselines.
pub fn random_terminal<R: Rng + ?Sized>(space: &Space, rng: &mut R) -> Result<State, MctsError> {
    simulate(space, &space.root(), space.max_actions() + 1, DEFAULT_ROLLOUT_RETRIES, rng)
}
