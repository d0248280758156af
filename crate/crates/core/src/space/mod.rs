//! Design domains, search states, legal actions and the fixed-length
//! architecture encoding.
//!
//! Two domains are supported behind one [`Space`] value: the DAG domain
//! ([`DagSpace`]) and the two-cell domain ([`CellSpace`]). A search [`State`]
//! is an architecture plus a terminal flag; taking [`Action::Terminate`]
//! freezes the architecture so it can be evaluated.

mod cell;
mod dag;
mod encoding;
mod enumerate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cell::{layer_code, Block, CellArchitecture, CellKind, CellSpace, BLOCK_DIGITS, LAYER_NAMES, NUM_LAYERS};
pub use dag::{DagArchitecture, DagSpace};
pub use encoding::{edit_distance, EncodedArch};
pub use enumerate::{canonical_hash, enumerate_space, estimated_space_size, EnumerateOptions, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("illegal action {0} for the current state")]
    IllegalAction(String),
    #[error("encoding length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),
    #[error("space too large to enumerate: estimated {estimated} > cap {cap}")]
    SpaceTooLarge { estimated: u128, cap: u128 },
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("state does not belong to this domain")]
    DomainMismatch,
}

/// An edit that moves one state to the next.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Terminate,
    AddNode { op: u8 },
    AddEdge { from: usize, to: usize },
    /// Opens a new block with its inputs and left-branch layer.
    NewBlock {
        cell: CellKind,
        left_input: u8,
        right_input: u8,
        left_layer: u8,
    },
    AddLayerRight { cell: CellKind, block: usize, layer: u8 },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell_char = |c: &CellKind| match c {
            CellKind::Normal => 'N',
            CellKind::Reduction => 'R',
        };
        match self {
            Action::Terminate => write!(f, "terminate"),
            Action::AddNode { op } => write!(f, "add_node({op})"),
            Action::AddEdge { from, to } => write!(f, "add_edge({from};{to})"),
            Action::NewBlock {
                cell,
                left_input,
                right_input,
                left_layer,
            } => write!(f, "new_block({};{left_input};{right_input};{left_layer})", cell_char(cell)),
            Action::AddLayerRight { cell, block, layer } => {
                write!(f, "add_layer_right({};{block};{layer})", cell_char(cell))
            }
        }
    }
}

/// A design in either domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Dag(DagArchitecture),
    Cell(CellArchitecture),
}

/// A search state: an architecture and whether it has been terminated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct State {
    pub arch: Architecture,
    pub terminal: bool,
}

/// A rule broken by an architecture. Violations are data, not errors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NodeCount { found: usize, max: usize },
    EdgeCount { found: usize, max: usize },
    OpCode { node: usize, op: u8 },
    NoInputOutputPath,
    OffPath { node: usize },
    BlockCount { cell: CellKind, found: usize, max: usize },
    EmptyCell { cell: CellKind },
    LayerCode { cell: CellKind, block: usize, code: u8 },
    ForwardReference { cell: CellKind, block: usize, input: u8 },
    BlockDepth { cell: CellKind, block: usize, depth: usize },
    EmptyBranch { cell: CellKind, block: usize },
}

impl Violation {
    /// Violations that only mean "not finished yet" rather than "out of bounds".
    pub fn is_completeness(&self) -> bool {
        matches!(
            self,
            Violation::NoInputOutputPath | Violation::OffPath { .. } | Violation::EmptyCell { .. } | Violation::EmptyBranch { .. }
        )
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeCount { found, max } => write!(f, "node count {found} exceeds max {max}"),
            Violation::EdgeCount { found, max } => write!(f, "edge count {found} exceeds max {max}"),
            Violation::OpCode { node, op } => write!(f, "node {node} has invalid op code {op}"),
            Violation::NoInputOutputPath => write!(f, "no input-output path"),
            Violation::OffPath { node } => write!(f, "node {node} not on any input-output path"),
            Violation::BlockCount { cell, found, max } => write!(f, "{cell:?} cell has {found} blocks, max {max}"),
            Violation::EmptyCell { cell } => write!(f, "{cell:?} cell has no blocks"),
            Violation::LayerCode { cell, block, code } => {
                write!(f, "{cell:?} block {block} has invalid layer code {code}")
            }
            Violation::ForwardReference { cell, block, input } => {
                write!(f, "{cell:?} block {block} references missing input {input}")
            }
            Violation::BlockDepth { cell, block, depth } => {
                write!(f, "{cell:?} block {block} has depth {depth}")
            }
            Violation::EmptyBranch { cell, block } => write!(f, "{cell:?} block {block} has an empty right branch"),
        }
    }
}

/// A design domain together with its limits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Space {
    Dag(DagSpace),
    Cell(CellSpace),
}

impl Space {
    pub fn dag(max_nodes: usize, num_ops: u8) -> Self {
        Space::Dag(DagSpace::new(max_nodes, num_ops))
    }

    pub fn cell() -> Self {
        Space::Cell(CellSpace::default())
    }

    pub fn check(&self) -> Result<(), SpaceError> {
        match self {
            Space::Dag(s) => s.check(),
            Space::Cell(s) => s.check(),
        }
    }

    pub fn root(&self) -> State {
        let arch = match self {
            Space::Dag(s) => Architecture::Dag(s.root()),
            Space::Cell(s) => Architecture::Cell(s.root()),
        };
        State { arch, terminal: false }
    }

    /// Legal actions in deterministic order, `Terminate` first. Terminal
    /// states have none.
    pub fn actions(&self, state: &State) -> Vec<Action> {
        if state.terminal {
            return Vec::new();
        }
        match (self, &state.arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.actions(a),
            (Space::Cell(s), Architecture::Cell(a)) => s.actions(a),
            _ => panic!("state does not belong to this domain"),
        }
    }

    pub fn is_legal(&self, state: &State, action: &Action) -> bool {
        if state.terminal {
            return false;
        }
        match (self, &state.arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.is_legal(a, action),
            (Space::Cell(s), Architecture::Cell(a)) => s.is_legal(a, action),
            _ => false,
        }
    }

    /// Successor of `state` under `action`.
    pub fn apply(&self, state: &State, action: &Action) -> Result<State, SpaceError> {
        if !self.is_legal(state, action) {
            return Err(SpaceError::IllegalAction(action.to_string()));
        }
        Ok(self.apply_unchecked(state, action))
    }

    pub(crate) fn apply_unchecked(&self, state: &State, action: &Action) -> State {
        if *action == Action::Terminate {
            return State {
                arch: state.arch.clone(),
                terminal: true,
            };
        }
        let arch = match (self, &state.arch) {
            (Space::Dag(s), Architecture::Dag(a)) => Architecture::Dag(s.apply_unchecked(a, action)),
            (Space::Cell(s), Architecture::Cell(a)) => Architecture::Cell(s.apply_unchecked(a, action)),
            _ => panic!("state does not belong to this domain"),
        };
        State { arch, terminal: false }
    }

    /// Appends the legal non-terminate actions to `out`.
    pub(crate) fn push_growth_actions(&self, arch: &Architecture, out: &mut Vec<Action>) {
        match (self, arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.push_growth_actions(a, out),
            (Space::Cell(s), Architecture::Cell(a)) => s.push_growth_actions(a, out),
            _ => panic!("state does not belong to this domain"),
        }
    }

    pub fn encode(&self, arch: &Architecture) -> EncodedArch {
        match (self, arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.encode(a),
            (Space::Cell(s), Architecture::Cell(a)) => s.encode(a),
            _ => panic!("architecture does not belong to this domain"),
        }
    }

    pub fn decode(&self, encoded: &EncodedArch) -> Result<Architecture, SpaceError> {
        match self {
            Space::Dag(s) => s.decode(encoded).map(Architecture::Dag),
            Space::Cell(s) => s.decode(encoded).map(Architecture::Cell),
        }
    }

    pub fn validate(&self, arch: &Architecture) -> Vec<Violation> {
        match (self, arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.validate(a),
            (Space::Cell(s), Architecture::Cell(a)) => s.validate(a),
            _ => panic!("architecture does not belong to this domain"),
        }
    }

    /// True when the architecture may be evaluated.
    pub fn is_complete(&self, arch: &Architecture) -> bool {
        match (self, arch) {
            (Space::Dag(s), Architecture::Dag(a)) => s.is_complete(a),
            (Space::Cell(s), Architecture::Cell(a)) => s.is_complete(a),
            _ => false,
        }
    }

    pub fn encoding_len(&self) -> usize {
        match self {
            Space::Dag(s) => s.encoding_len(),
            Space::Cell(s) => s.encoding_len(),
        }
    }

    /// Largest digit any encoding can contain.
    pub fn max_digit(&self) -> u8 {
        match self {
            Space::Dag(s) => s.output_code(),
            Space::Cell(s) => s.max_digit(),
        }
    }

    /// Length of the longest action sequence needed to build the largest
    /// legal architecture.
    pub fn max_actions(&self) -> usize {
        match self {
            Space::Dag(s) => s.max_actions(),
            Space::Cell(s) => s.max_actions(),
        }
    }
}
