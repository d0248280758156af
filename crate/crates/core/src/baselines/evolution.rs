use std::collections::VecDeque;

use rand::seq::index::sample;

use super::{mutate, BaselineError, EvolutionConfig};
use crate::eval::Evaluator;
use crate::harness::{Recorder, StopRule, TrialTrace};
use crate::mcts::random_terminal;
use crate::rng::RunRng;
use crate::space::Architecture;

/// Aging evolution: mutate the best of a random tournament, append the
/// child and retire the oldest member.
pub fn regularized_evolution(
    evaluator: &dyn Evaluator,
    cfg: &EvolutionConfig,
    stop: StopRule,
    seed: u64,
) -> Result<TrialTrace, BaselineError> {
    if cfg.tournament_size == 0 || cfg.tournament_size > cfg.population_size {
        return Err(BaselineError::InvalidConfig("tournament must be in 1..=population".into()));
    }
    let space = evaluator.space().clone();
    let mut rng = RunRng::new(seed);
    let mut rec = Recorder::new(evaluator, stop);
    let mut population: VecDeque<(Architecture, f64)> = VecDeque::with_capacity(cfg.population_size + 1);

    while population.len() < cfg.population_size && !rec.done() {
        rec.step();
        if let Ok(state) = random_terminal(&space, &mut rng) {
            let acc = rec.evaluate(&state.arch)?;
            population.push_back((state.arch, acc));
        }
    }
    while !rec.done() {
        rec.step();
        let contestants = sample(&mut rng, population.len(), cfg.tournament_size);
        let parent = &population[tournament_winner(&population, contestants)].0;
        let child = match mutate(&space, parent, &mut rng) {
            Some(child) => child,
            None => match random_terminal(&space, &mut rng) {
                Ok(state) => state.arch,
                Err(_) => continue,
            },
        };
        let acc = rec.evaluate(&child)?;
        population.push_back((child, acc));
        population.pop_front();
    }
    Ok(rec.finish("re", seed, ""))
}

/// Most accurate contestant; ties go to the older member.
fn tournament_winner(population: &VecDeque<(Architecture, f64)>, contestants: impl IntoIterator<Item = usize>) -> usize {
    let mut winner: Option<usize> = None;
    for i in contestants {
        if winner.map_or(true, |w| population[i].1 > population[w].1 || (population[i].1 == population[w].1 && i < w)) {
            winner = Some(i);
        }
    }
    winner.expect("tournament is nonempty")
}
