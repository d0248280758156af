use rand::seq::SliceRandom;
use rand::Rng;

use crate::space::{Architecture, Block, CellArchitecture, CellKind, CellSpace, DagArchitecture, DagSpace, Space};

const MUTATION_ATTEMPTS: usize = 64;

#[derive(Clone, Copy)]
enum DagEdit {
    FlipEdge,
    ChangeOp,
    AddNode,
    RemoveNode,
}

#[derive(Clone, Copy)]
enum CellEdit {
    ChangeLayer,
    ChangeInput,
    AddBlock,
    RemoveBlock,
}

/// A single random edit of `arch` that yields a different valid, complete
/// architecture; `None` if no such edit was found within a bounded number of
/// attempts.
///
/// DAG edits: flip one adjacency bit, change one op, insert a node wired to
/// one earlier and one later node, or remove a node. Cell edits: change one
/// layer, change one input, append a block, or drop the last block.
pub fn mutate<R: Rng + ?Sized>(space: &Space, arch: &Architecture, rng: &mut R) -> Option<Architecture> {
    for _ in 0..MUTATION_ATTEMPTS {
        let child = match (space, arch) {
            (Space::Dag(s), Architecture::Dag(a)) => mutate_dag(s, a, rng).map(Architecture::Dag),
            (Space::Cell(s), Architecture::Cell(a)) => mutate_cell(s, a, rng).map(Architecture::Cell),
            _ => return None,
        };
        if let Some(child) = child {
            if child != *arch && space.validate(&child).is_empty() {
                return Some(child);
            }
        }
    }
    None
}

fn mutate_dag<R: Rng + ?Sized>(space: &DagSpace, arch: &DagArchitecture, rng: &mut R) -> Option<DagArchitecture> {
    let n = arch.num_nodes();
    let mut edits = vec![DagEdit::FlipEdge];
    if n > 2 && space.num_ops > 1 {
        edits.push(DagEdit::ChangeOp);
    }
    if n < space.max_nodes {
        edits.push(DagEdit::AddNode);
    }
    if n > 2 {
        edits.push(DagEdit::RemoveNode);
    }
    let mut child = arch.clone();
    match *edits.choose(rng)? {
        DagEdit::FlipEdge => {
            let to = rng.gen_range(1..n);
            let from = rng.gen_range(0..to);
            child.toggle_edge(from, to);
        }
        DagEdit::ChangeOp => {
            let node = rng.gen_range(1..n - 1);
            let current = arch.node_ops()[node - 1];
            let mut op = rng.gen_range(1..space.num_ops);
            if op >= current {
                op += 1;
            }
            child.set_op(node, op);
        }
        DagEdit::AddNode => {
            let at = rng.gen_range(1..n);
            let op = rng.gen_range(1..=space.num_ops);
            child.insert_node_at(at, op);
            let from = rng.gen_range(0..at);
            let to = rng.gen_range(at + 1..n + 1);
            child.toggle_edge(from, at);
            child.toggle_edge(at, to);
        }
        DagEdit::RemoveNode => {
            let node = rng.gen_range(1..n - 1);
            child.remove_node(node);
        }
    }
    Some(child)
}

fn mutate_cell<R: Rng + ?Sized>(space: &CellSpace, arch: &CellArchitecture, rng: &mut R) -> Option<CellArchitecture> {
    let kind = *CellKind::ALL.choose(rng)?;
    let blocks = arch.cell(kind);
    let mut edits = Vec::new();
    if !blocks.is_empty() {
        edits.extend([CellEdit::ChangeLayer, CellEdit::ChangeInput]);
    }
    if blocks.len() < space.max_blocks {
        edits.push(CellEdit::AddBlock);
    }
    if blocks.len() > 1 {
        edits.push(CellEdit::RemoveBlock);
    }
    let layers = space.max_digit();
    let mut child = arch.clone();
    let cell = match kind {
        CellKind::Normal => &mut child.normal,
        CellKind::Reduction => &mut child.reduction,
    };
    match *edits.choose(rng)? {
        CellEdit::ChangeLayer => {
            let b = rng.gen_range(0..cell.len());
            let code = rng.gen_range(1..=layers);
            if rng.gen_bool(0.5) {
                cell[b].left_layer = code;
            } else {
                cell[b].right_layer = Some(code);
            }
        }
        CellEdit::ChangeInput => {
            let b = rng.gen_range(0..cell.len());
            let input = rng.gen_range(0..2 + b as u8);
            if rng.gen_bool(0.5) {
                cell[b].left_input = input;
            } else {
                cell[b].right_input = input;
            }
        }
        CellEdit::AddBlock => {
            let limit = 2 + cell.len() as u8;
            cell.push(Block {
                left_layer: rng.gen_range(1..=layers),
                right_layer: Some(rng.gen_range(1..=layers)),
                left_input: rng.gen_range(0..limit),
                right_input: rng.gen_range(0..limit),
            });
        }
        CellEdit::RemoveBlock => {
            cell.pop();
        }
    }
    Some(child)
}
