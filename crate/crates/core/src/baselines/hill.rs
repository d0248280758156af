use std::collections::HashSet;

use super::{BaselineError, HillClimbConfig};
use crate::eval::Evaluator;
use crate::harness::{Recorder, StopRule, TrialTrace};
use crate::mcts::random_terminal;
use crate::rng::RunRng;
use crate::space::{Architecture, CellKind, Space, State};

/// Complete architectures one edit away from `arch`, in deterministic order:
/// each legal growth action first, then the removals (dropping one edge or
/// one intermediate node for DAGs, the last block of a cell for cells).
pub fn neighbors(space: &Space, arch: &Architecture) -> Vec<Architecture> {
    let state = State {
        arch: arch.clone(),
        terminal: false,
    };
    let mut out: Vec<Architecture> = Vec::new();
    let push = |candidate: Architecture, out: &mut Vec<Architecture>| {
        if candidate != *arch && space.validate(&candidate).is_empty() && !out.contains(&candidate) {
            out.push(candidate);
        }
    };
    for action in space.actions(&state).into_iter().skip(1) {
        if let Ok(next) = space.apply(&state, &action) {
            push(next.arch, &mut out);
        }
    }
    match arch {
        Architecture::Dag(a) => {
            for (from, to) in a.edges() {
                let mut c = a.clone();
                c.toggle_edge(from, to);
                push(Architecture::Dag(c), &mut out);
            }
            for node in 1..a.num_nodes().saturating_sub(1) {
                let mut c = a.clone();
                c.remove_node(node);
                push(Architecture::Dag(c), &mut out);
            }
        }
        Architecture::Cell(a) => {
            for kind in CellKind::ALL {
                if a.cell(kind).len() > 1 {
                    let mut c = a.clone();
                    match kind {
                        CellKind::Normal => c.normal.pop(),
                        CellKind::Reduction => c.reduction.pop(),
                    };
                    push(Architecture::Cell(c), &mut out);
                }
            }
        }
    }
    out
}

/// Steepest-ascent hill climbing.
///
/// Each step evaluates the whole neighbourhood and moves to its best member
/// (first in neighbour order on ties), even when that is worse than the
/// current architecture. Stepping onto an architecture already visited in
/// the current trajectory means the climb is trapped: it restarts from a
/// random architecture when `restart_on_revisit` is set and stops otherwise.
pub fn hill_climb(
    evaluator: &dyn Evaluator,
    cfg: &HillClimbConfig,
    stop: StopRule,
    seed: u64,
) -> Result<TrialTrace, BaselineError> {
    let space = evaluator.space().clone();
    let mut rng = RunRng::new(seed);
    let mut rec = Recorder::new(evaluator, stop);
    let mut trajectory: HashSet<Architecture> = HashSet::new();
    let mut current: Option<Architecture> = None;
    while !rec.done() {
        rec.step();
        let Some(arch) = current.take() else {
            if let Ok(state) = random_terminal(&space, &mut rng) {
                rec.evaluate(&state.arch)?;
                trajectory.clear();
                trajectory.insert(state.arch.clone());
                current = Some(state.arch);
            }
            continue;
        };
        let mut best: Option<(Architecture, f64)> = None;
        for n in neighbors(&space, &arch) {
            if rec.done() {
                break;
            }
            let a = rec.evaluate(&n)?;
            if best.as_ref().map_or(true, |(_, b)| a > *b) {
                best = Some((n, a));
            }
        }
        match best {
            Some((next, _)) if trajectory.insert(next.clone()) => current = Some(next),
            _ if cfg.restart_on_revisit => current = None,
            _ => break,
        }
    }
    Ok(rec.finish("hc", seed, ""))
}
