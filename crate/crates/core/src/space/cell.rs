//! NASNet-style cell domain: a normal and a reduction cell, each holding up to
//! five blocks; a block combines two branches with at most one layer each.

use serde::{Deserialize, Serialize};

use super::{Action, EncodedArch, SpaceError, Violation};

/// Layer vocabulary, indexed by `code - 1`.
pub const LAYER_NAMES: [&str; 12] = [
    "3x3 avg pool",
    "5x5 avg pool",
    "7x7 avg pool",
    "3x3 max pool",
    "5x5 max pool",
    "7x7 max pool",
    "3x3 conv",
    "5x5 conv",
    "identity",
    "3x3 depth-separable conv",
    "5x5 depth-separable conv",
    "7x7 depth-separable conv",
];

pub const NUM_LAYERS: u8 = 12;
pub const BLOCK_DIGITS: usize = 6;

/// Code of a layer by its name in [`LAYER_NAMES`].
pub fn layer_code(name: &str) -> Option<u8> {
    LAYER_NAMES.iter().position(|&n| n == name).map(|i| i as u8 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Normal,
    Reduction,
}

impl CellKind {
    pub const ALL: [CellKind; 2] = [CellKind::Normal, CellKind::Reduction];
}

/// One block. Input codes: 0 = previous cell output, 1 = the cell before
/// that, `i + 2` = output of block `i` of the same cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub left_layer: u8,
    pub right_layer: Option<u8>,
    pub left_input: u8,
    pub right_input: u8,
}

impl Block {
    fn digits(&self) -> [u8; BLOCK_DIGITS] {
        [
            self.left_layer,
            0,
            self.right_layer.unwrap_or(0),
            0,
            self.left_input,
            self.right_input,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CellArchitecture {
    pub normal: Vec<Block>,
    pub reduction: Vec<Block>,
}

impl CellArchitecture {
    pub fn cell(&self, kind: CellKind) -> &[Block] {
        match kind {
            CellKind::Normal => &self.normal,
            CellKind::Reduction => &self.reduction,
        }
    }

    fn cell_mut(&mut self, kind: CellKind) -> &mut Vec<Block> {
        match kind {
            CellKind::Normal => &mut self.normal,
            CellKind::Reduction => &mut self.reduction,
        }
    }
}

/// Limits of the cell domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpace {
    pub max_blocks: usize,
    /// Maximum chain length of block-to-block input references.
    pub max_depth: usize,
}

impl Default for CellSpace {
    fn default() -> Self {
        Self {
            max_blocks: 5,
            max_depth: 2,
        }
    }
}

impl CellSpace {
    pub fn check(&self) -> Result<(), SpaceError> {
        if self.max_blocks == 0 || self.max_blocks > 5 {
            return Err(SpaceError::InvalidLimits(format!(
                "max_blocks must be in 1..=5, got {}",
                self.max_blocks
            )));
        }
        if self.max_depth == 0 {
            return Err(SpaceError::InvalidLimits("max_depth must be positive".into()));
        }
        Ok(())
    }

    /// Always 60: ten block slots of six digits, unused slots zero.
    pub fn encoding_len(&self) -> usize {
        10 * BLOCK_DIGITS
    }

    pub fn max_digit(&self) -> u8 {
        NUM_LAYERS
    }

    pub fn max_actions(&self) -> usize {
        2 * self.max_blocks * 2
    }

    pub fn root(&self) -> CellArchitecture {
        CellArchitecture::default()
    }

    pub fn actions(&self, arch: &CellArchitecture) -> Vec<Action> {
        let mut out = vec![Action::Terminate];
        self.push_growth_actions(arch, &mut out);
        out
    }

    pub(crate) fn push_growth_actions(&self, arch: &CellArchitecture, out: &mut Vec<Action>) {
        for cell in CellKind::ALL {
            for (block, b) in arch.cell(cell).iter().enumerate() {
                if b.right_layer.is_none() {
                    out.extend((1..=NUM_LAYERS).map(|layer| Action::AddLayerRight { cell, block, layer }));
                }
            }
        }
        for cell in CellKind::ALL {
            let blocks = arch.cell(cell);
            if blocks.len() >= self.max_blocks {
                continue;
            }
            let depths = block_depths(blocks);
            let inputs = 2 + blocks.len() as u8;
            for left_input in 0..inputs {
                for right_input in 0..inputs {
                    if new_block_depth(&depths, left_input, right_input) > self.max_depth {
                        continue;
                    }
                    for left_layer in 1..=NUM_LAYERS {
                        out.push(Action::NewBlock {
                            cell,
                            left_input,
                            right_input,
                            left_layer,
                        });
                    }
                }
            }
        }
    }

    pub(crate) fn is_legal(&self, arch: &CellArchitecture, action: &Action) -> bool {
        match *action {
            Action::Terminate => true,
            Action::AddLayerRight { cell, block, layer } => {
                (1..=NUM_LAYERS).contains(&layer)
                    && arch.cell(cell).get(block).is_some_and(|b| b.right_layer.is_none())
            }
            Action::NewBlock {
                cell,
                left_input,
                right_input,
                left_layer,
            } => {
                let blocks = arch.cell(cell);
                let inputs = 2 + blocks.len() as u8;
                blocks.len() < self.max_blocks
                    && left_input < inputs
                    && right_input < inputs
                    && (1..=NUM_LAYERS).contains(&left_layer)
                    && new_block_depth(&block_depths(blocks), left_input, right_input) <= self.max_depth
            }
            _ => false,
        }
    }

    pub(crate) fn apply_unchecked(&self, arch: &CellArchitecture, action: &Action) -> CellArchitecture {
        let mut next = arch.clone();
        match *action {
            Action::AddLayerRight { cell, block, layer } => {
                next.cell_mut(cell)[block].right_layer = Some(layer);
            }
            Action::NewBlock {
                cell,
                left_input,
                right_input,
                left_layer,
            } => next.cell_mut(cell).push(Block {
                left_layer,
                right_layer: None,
                left_input,
                right_input,
            }),
            _ => {}
        }
        next
    }

    pub fn encode(&self, arch: &CellArchitecture) -> EncodedArch {
        let mut digits = vec![0u8; self.encoding_len()];
        for (offset, cell) in [(0, CellKind::Normal), (5, CellKind::Reduction)] {
            for (i, b) in arch.cell(cell).iter().enumerate() {
                let at = (offset + i) * BLOCK_DIGITS;
                digits[at..at + BLOCK_DIGITS].copy_from_slice(&b.digits());
            }
        }
        EncodedArch::new(digits)
    }

    pub fn decode(&self, encoded: &EncodedArch) -> Result<CellArchitecture, SpaceError> {
        let digits = encoded.digits();
        if digits.len() != self.encoding_len() {
            return Err(SpaceError::LengthMismatch {
                left: digits.len(),
                right: self.encoding_len(),
            });
        }
        let mut arch = CellArchitecture::default();
        for (offset, cell) in [(0, CellKind::Normal), (5, CellKind::Reduction)] {
            let mut ended = false;
            for i in 0..5 {
                let at = (offset + i) * BLOCK_DIGITS;
                let d = &digits[at..at + BLOCK_DIGITS];
                if d.iter().all(|&x| x == 0) {
                    ended = true;
                    continue;
                }
                let bad = |msg: &str| Err(SpaceError::InvalidEncoding(format!("{cell:?} block {i}: {msg}")));
                if ended {
                    return bad("present after an absent block");
                }
                if d[1] != 0 || d[3] != 0 {
                    return bad("second layer slot must be empty");
                }
                if d[0] == 0 || d[0] > NUM_LAYERS || d[2] > NUM_LAYERS {
                    return bad("layer code out of range");
                }
                arch.cell_mut(cell).push(Block {
                    left_layer: d[0],
                    right_layer: (d[2] != 0).then_some(d[2]),
                    left_input: d[4],
                    right_input: d[5],
                });
            }
        }
        let structural: Vec<_> = self
            .validate(&arch)
            .into_iter()
            .filter(|v| !matches!(v, Violation::EmptyBranch { .. } | Violation::EmptyCell { .. }))
            .collect();
        if let Some(v) = structural.first() {
            return Err(SpaceError::InvalidEncoding(v.to_string()));
        }
        Ok(arch)
    }

    pub fn validate(&self, arch: &CellArchitecture) -> Vec<Violation> {
        let mut out = Vec::new();
        for cell in CellKind::ALL {
            let blocks = arch.cell(cell);
            if blocks.len() > self.max_blocks {
                out.push(Violation::BlockCount {
                    cell,
                    found: blocks.len(),
                    max: self.max_blocks,
                });
            }
            if blocks.is_empty() {
                out.push(Violation::EmptyCell { cell });
            }
            let mut forward = false;
            for (i, b) in blocks.iter().enumerate() {
                for layer in [Some(b.left_layer), b.right_layer].into_iter().flatten() {
                    if layer == 0 || layer > NUM_LAYERS {
                        out.push(Violation::LayerCode { cell, block: i, code: layer });
                    }
                }
                for input in [b.left_input, b.right_input] {
                    if usize::from(input) >= i + 2 {
                        forward = true;
                        out.push(Violation::ForwardReference { cell, block: i, input });
                    }
                }
                if b.right_layer.is_none() {
                    out.push(Violation::EmptyBranch { cell, block: i });
                }
            }
            if !forward {
                for (i, depth) in block_depths(blocks).into_iter().enumerate() {
                    if depth > self.max_depth {
                        out.push(Violation::BlockDepth { cell, block: i, depth });
                    }
                }
            }
        }
        out
    }

    pub fn is_complete(&self, arch: &CellArchitecture) -> bool {
        self.validate(arch).is_empty()
    }
}

/// Depth of each block: inputs from previous cells have depth 0, a block is
/// one deeper than its deepest input.
fn block_depths(blocks: &[Block]) -> Vec<usize> {
    let mut depths: Vec<usize> = Vec::with_capacity(blocks.len());
    for b in blocks {
        let d = new_block_depth(&depths, b.left_input, b.right_input);
        depths.push(d);
    }
    depths
}

fn new_block_depth(depths: &[usize], left: u8, right: u8) -> usize {
    let input_depth = |code: u8| -> usize {
        if code < 2 {
            0
        } else {
            depths.get(usize::from(code) - 2).copied().unwrap_or(usize::MAX - 1)
        }
    };
    1 + input_depth(left).max(input_depth(right))
}
