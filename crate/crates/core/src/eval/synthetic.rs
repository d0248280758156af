use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{EvalError, Evaluator};
use crate::hash::Fnv1a64;
use crate::space::{enumerate_space, Architecture, DagArchitecture, DagSpace, EncodedArch, EnumerateOptions, Space};

/// Mixing weights of the synthetic accuracy formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWeights {
    pub depth: f64,
    pub ops: f64,
    pub noise: f64,
    pub edges: f64,
}

impl Default for SyntheticWeights {
    fn default() -> Self {
        Self {
            depth: 0.20,
            ops: 0.15,
            noise: 0.10,
            edges: 0.05,
        }
    }
}

const BASE: f64 = 0.50;
const NOISE_BITS: u32 = 24;

/// Deterministic stand-in for trained accuracies over the DAG domain.
///
/// Rewards long input-output paths and op diversity, penalises edges, and
/// adds a hash-derived noise term so ties are rare. Results are rounded to six
/// decimals, the precision of exported tables, so a table written from the
/// oracle answers identically.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    space: Space,
    dag: DagSpace,
    seed: u64,
    weights: SyntheticWeights,
    optimum: OnceLock<Option<(EncodedArch, f64)>>,
}

impl SyntheticOracle {
    pub fn new(dag: DagSpace, seed: u64) -> Self {
        Self::with_weights(dag, seed, SyntheticWeights::default())
    }

    pub fn with_weights(dag: DagSpace, seed: u64, weights: SyntheticWeights) -> Self {
        Self {
            space: Space::Dag(dag.clone()),
            dag,
            seed,
            weights,
            optimum: OnceLock::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Noise draw in `[0, 1)` for an encoding.
    pub fn noise(&self, encoding: &EncodedArch) -> f64 {
        let mut h = Fnv1a64::default();
        h.write(encoding.to_text().as_bytes());
        h.write_u64(self.seed);
        (h.finish() % (1u64 << NOISE_BITS)) as f64 / (1u64 << NOISE_BITS) as f64
    }

    /// Unrounded formula value, clamped to `[0, 1]`.
    pub fn raw_accuracy(&self, arch: &DagArchitecture) -> Result<f64, EvalError> {
        if !self.dag.is_complete(arch) {
            return Err(EvalError::IncompleteArchitecture);
        }
        let m = self.dag.max_nodes as f64;
        let longest = arch.longest_path().ok_or(EvalError::IncompleteArchitecture)? as f64;
        let distinct = arch.distinct_ops() as f64;
        let edges = arch.edge_count() as f64;
        let max_edges = m * (m - 1.0) / 2.0;
        let w = &self.weights;
        let u = self.noise(&self.dag.encode(arch));
        let value = BASE + w.depth * longest / (m - 1.0) + w.ops * distinct / f64::from(self.dag.num_ops)
            - w.edges * edges / max_edges
            + w.noise * u;
        Ok(value.clamp(0.0, 1.0))
    }

    pub fn dag_accuracy(&self, arch: &DagArchitecture) -> Result<f64, EvalError> {
        Ok(round6(self.raw_accuracy(arch)?))
    }
}

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl Evaluator for SyntheticOracle {
    fn space(&self) -> &Space {
        &self.space
    }

    fn accuracy(&self, arch: &Architecture) -> Result<f64, EvalError> {
        match arch {
            Architecture::Dag(a) => self.dag_accuracy(a),
            Architecture::Cell(_) => Err(EvalError::DomainMismatch),
        }
    }

    /// Brute-force optimum; `None` when the space is too large to enumerate.
    /// Ties keep the first architecture in enumeration order.
    fn optimum(&self) -> Result<Option<(EncodedArch, f64)>, EvalError> {
        if let Some(found) = self.optimum.get() {
            return Ok(found.clone());
        }
        let found = match enumerate_space(&self.dag, &EnumerateOptions::default()) {
            Ok(iter) => {
                let mut best: Option<(DagArchitecture, f64)> = None;
                for arch in iter {
                    let acc = self.dag_accuracy(&arch)?;
                    if best.as_ref().map_or(true, |(_, b)| acc > *b) {
                        best = Some((arch, acc));
                    }
                }
                best.map(|(a, acc)| (self.dag.encode(&a), acc))
            }
            Err(crate::space::SpaceError::SpaceTooLarge { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(self.optimum.get_or_init(|| found).clone())
    }
}
