//! Ground-truth accuracy sources and the transfer-learning cost model.

mod synthetic;
mod tabular;

pub use synthetic::{SyntheticOracle, SyntheticWeights};
pub use tabular::{export_tabular, write_tabular, TabularBenchmark};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcts::{NodeId, SearchTree};
use crate::space::{edit_distance, Architecture, EncodedArch, Space, SpaceError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("architecture {0} is not in the table")]
    NotInTable(String),
    #[error("architecture is not complete")]
    IncompleteArchitecture,
    #[error("evaluator does not support this domain")]
    DomainMismatch,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid encoding: {message}")]
    InvalidEncoding { line: usize, message: String },
    #[error("line {line}: accuracy {value} outside [0, 1]")]
    AccuracyOutOfRange { line: usize, value: f64 },
    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: usize, key: String },
    #[error("table has no rows")]
    EmptyTable,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Anything that can report the true accuracy of a complete architecture.
pub trait Evaluator: Send + Sync {
    fn space(&self) -> &Space;

    fn accuracy(&self, arch: &Architecture) -> Result<f64, EvalError>;

    /// The best architecture and its accuracy when the evaluator can know it.
    fn optimum(&self) -> Result<Option<(EncodedArch, f64)>, EvalError>;

    /// Accuracy of an architecture given in encoded form.
    fn accuracy_of(&self, encoding: &EncodedArch) -> Result<f64, EvalError> {
        let arch = self.space().decode(encoding)?;
        self.accuracy(&arch)
    }
}

/// Simulated training epochs with and without a trained parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub full_epochs: u32,
    pub transfer_epochs: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            full_epochs: 70,
            transfer_epochs: 20,
        }
    }
}

impl CostModel {
    pub fn epochs(&self, transferred: bool) -> u32 {
        if transferred {
            self.transfer_epochs
        } else {
            self.full_epochs
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub cost_epochs: u32,
    pub from_transfer: bool,
}

/// Evaluates a complete architecture and prices it with the cost model.
pub fn evaluate(
    evaluator: &dyn Evaluator,
    arch: &Architecture,
    parent: Option<&EncodedArch>,
    cost: &CostModel,
) -> Result<Evaluation, EvalError> {
    let accuracy = evaluator.accuracy(arch)?;
    let from_transfer = parent.is_some();
    Ok(Evaluation {
        accuracy,
        cost_epochs: cost.epochs(from_transfer),
        from_transfer,
    })
}

/// Closest trained architecture on the path from `node` up to the root.
///
/// `node` itself is considered first; among trained candidates the smallest
/// edit distance to `target` wins and ties go to the nearer one.
pub fn find_transfer_parent(
    tree: &SearchTree,
    node: NodeId,
    target: &EncodedArch,
    is_trained: impl Fn(&EncodedArch) -> bool,
) -> Option<(EncodedArch, usize)> {
    let mut best: Option<(EncodedArch, usize)> = None;
    for id in tree.lineage(node) {
        let enc = &tree.node(id).encoding;
        if !is_trained(enc) {
            continue;
        }
        let Ok(d) = edit_distance(enc, target) else {
            continue;
        };
        if best.as_ref().map_or(true, |(_, bd)| d < *bd) {
            best = Some((enc.clone(), d));
        }
    }
    best
}

/// Totals of simulated training cost over a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub evaluations: usize,
    pub transferred: usize,
    pub total_epochs: u64,
    pub epochs_without_transfer: u64,
}

impl CostLedger {
    pub fn from_evaluations<'a>(evals: impl IntoIterator<Item = &'a Evaluation>, cost: &CostModel) -> Self {
        let mut ledger = CostLedger::default();
        for e in evals {
            ledger.record(e.from_transfer, cost);
        }
        ledger
    }

    pub fn record(&mut self, transferred: bool, cost: &CostModel) {
        self.evaluations += 1;
        self.transferred += usize::from(transferred);
        self.total_epochs += u64::from(cost.epochs(transferred));
        self.epochs_without_transfer += u64::from(cost.full_epochs);
    }
}
