use crate::eval::Evaluator;
use crate::harness::{Recorder, StopRule, TrialTrace};
use crate::mcts::random_terminal;
use crate::rng::RunRng;

use super::BaselineError;

/// Repeated uniform rollouts from the root until the stop rule fires.
pub fn random_search(evaluator: &dyn Evaluator, stop: StopRule, seed: u64) -> Result<TrialTrace, BaselineError> {
    let space = evaluator.space().clone();
    let mut rng = RunRng::new(seed);
    let mut rec = Recorder::new(evaluator, stop);
    while !rec.done() {
        rec.step();
        if let Ok(state) = random_terminal(&space, &mut rng) {
            rec.evaluate(&state.arch)?;
        }
    }
    Ok(rec.finish("rs", seed, ""))
}
