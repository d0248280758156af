//! NASBench-style DAG domain: nodes are layers, node 0 is INPUT and the last
//! node is OUTPUT, edges always point from a lower to a higher index.

use serde::{Deserialize, Serialize};

use super::{Action, EncodedArch, SpaceError, Violation};

/// Limits of the DAG design domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagSpace {
    /// Maximum node count including INPUT and OUTPUT.
    pub max_nodes: usize,
    /// Size of the intermediate-op vocabulary; op codes are `1..=num_ops`.
    pub num_ops: u8,
    /// Optional cap on the number of edges. `None` allows the full
    /// upper-triangular matrix.
    #[serde(default)]
    pub max_edges: Option<usize>,
}

impl DagSpace {
    pub const MAX_SUPPORTED_NODES: usize = 32;

    pub fn new(max_nodes: usize, num_ops: u8) -> Self {
        Self {
            max_nodes,
            num_ops,
            max_edges: None,
        }
    }

    pub fn with_max_edges(mut self, max_edges: usize) -> Self {
        self.max_edges = Some(max_edges);
        self
    }

    pub fn check(&self) -> Result<(), SpaceError> {
        if !(2..=Self::MAX_SUPPORTED_NODES).contains(&self.max_nodes) {
            return Err(SpaceError::InvalidLimits(format!(
                "max_nodes must be in 2..={}, got {}",
                Self::MAX_SUPPORTED_NODES,
                self.max_nodes
            )));
        }
        if self.num_ops == 0 || self.num_ops > 250 {
            return Err(SpaceError::InvalidLimits(format!(
                "num_ops must be in 1..=250, got {}",
                self.num_ops
            )));
        }
        Ok(())
    }

    /// Op code stored in the node list for INPUT.
    pub fn input_code(&self) -> u8 {
        self.num_ops + 1
    }

    /// Op code stored in the node list for OUTPUT.
    pub fn output_code(&self) -> u8 {
        self.num_ops + 2
    }

    pub fn max_possible_edges(&self) -> usize {
        self.max_nodes * (self.max_nodes - 1) / 2
    }

    fn edge_cap(&self) -> usize {
        self.max_edges.unwrap_or(usize::MAX)
    }

    pub fn encoding_len(&self) -> usize {
        self.max_nodes * self.max_nodes + self.max_nodes
    }

    /// Longest action sequence that builds the largest legal architecture.
    pub fn max_actions(&self) -> usize {
        let edges = self.max_possible_edges().min(self.edge_cap());
        (self.max_nodes - 2) + edges
    }

    pub fn root(&self) -> DagArchitecture {
        DagArchitecture {
            num_nodes: 2,
            adjacency: vec![0; 2],
            node_ops: Vec::new(),
        }
    }

    pub fn actions(&self, arch: &DagArchitecture) -> Vec<Action> {
        let mut out = vec![Action::Terminate];
        self.push_growth_actions(arch, &mut out);
        out
    }

    pub(crate) fn push_growth_actions(&self, arch: &DagArchitecture, out: &mut Vec<Action>) {
        if arch.num_nodes < self.max_nodes {
            out.extend((1..=self.num_ops).map(|op| Action::AddNode { op }));
        }
        if arch.edge_count() < self.edge_cap() {
            for from in 0..arch.num_nodes {
                for to in from + 1..arch.num_nodes {
                    if !arch.has_edge(from, to) {
                        out.push(Action::AddEdge { from, to });
                    }
                }
            }
        }
    }

    pub(crate) fn is_legal(&self, arch: &DagArchitecture, action: &Action) -> bool {
        match *action {
            Action::Terminate => true,
            Action::AddNode { op } => arch.num_nodes < self.max_nodes && (1..=self.num_ops).contains(&op),
            Action::AddEdge { from, to } => {
                from < to
                    && to < arch.num_nodes
                    && !arch.has_edge(from, to)
                    && arch.edge_count() < self.edge_cap()
            }
            _ => false,
        }
    }

    /// Applies a growth action without checking legality.
    pub(crate) fn apply_unchecked(&self, arch: &DagArchitecture, action: &Action) -> DagArchitecture {
        let mut next = arch.clone();
        match *action {
            Action::AddNode { op } => next.insert_node(op),
            Action::AddEdge { from, to } => next.adjacency[from] |= 1 << to,
            _ => {}
        }
        next
    }

    pub fn encode(&self, arch: &DagArchitecture) -> EncodedArch {
        let m = self.max_nodes;
        let mut digits = vec![0u8; self.encoding_len()];
        for from in 0..arch.num_nodes {
            for to in from + 1..arch.num_nodes {
                if arch.has_edge(from, to) {
                    digits[from * m + to] = 1;
                }
            }
        }
        let ops = &mut digits[m * m..];
        ops[0] = self.input_code();
        for (k, &op) in arch.node_ops.iter().enumerate() {
            ops[k + 1] = op;
        }
        ops[arch.num_nodes - 1] = self.output_code();
        EncodedArch::new(digits)
    }

    pub fn decode(&self, encoded: &EncodedArch) -> Result<DagArchitecture, SpaceError> {
        let m = self.max_nodes;
        let digits = encoded.digits();
        if digits.len() != self.encoding_len() {
            return Err(SpaceError::LengthMismatch {
                left: digits.len(),
                right: self.encoding_len(),
            });
        }
        let (adj, ops) = digits.split_at(m * m);
        let bad = |msg: String| Err(SpaceError::InvalidEncoding(msg));
        if ops[0] != self.input_code() {
            return bad(format!("node list must start with INPUT code {}", self.input_code()));
        }
        let Some(out_pos) = ops.iter().position(|&d| d == self.output_code()) else {
            return bad("node list has no OUTPUT code".into());
        };
        if out_pos == 0 {
            return bad("OUTPUT code at position 0".into());
        }
        let node_ops = ops[1..out_pos].to_vec();
        if node_ops.iter().any(|&op| op == 0 || op > self.num_ops) {
            return bad(format!("intermediate op outside 1..={}", self.num_ops));
        }
        if ops[out_pos + 1..].iter().any(|&d| d != 0) {
            return bad("digits after OUTPUT must be zero".into());
        }
        let num_nodes = out_pos + 1;
        let mut adjacency = vec![0u32; num_nodes];
        for i in 0..m {
            for j in 0..m {
                match adj[i * m + j] {
                    0 => {}
                    1 if i < j && j < num_nodes => adjacency[i] |= 1 << j,
                    1 => return bad(format!("edge {i}->{j} is not upper-triangular within {num_nodes} nodes")),
                    d => return bad(format!("adjacency digit {d} is not 0/1")),
                }
            }
        }
        Ok(DagArchitecture {
            num_nodes,
            adjacency,
            node_ops,
        })
    }

    pub fn validate(&self, arch: &DagArchitecture) -> Vec<Violation> {
        let mut out = Vec::new();
        if arch.num_nodes > self.max_nodes {
            out.push(Violation::NodeCount {
                found: arch.num_nodes,
                max: self.max_nodes,
            });
        }
        if arch.num_nodes < 2 {
            out.push(Violation::NodeCount {
                found: arch.num_nodes,
                max: self.max_nodes,
            });
            return out;
        }
        let edges = arch.edge_count();
        if edges > self.edge_cap() {
            out.push(Violation::EdgeCount {
                found: edges,
                max: self.edge_cap(),
            });
        }
        for (k, &op) in arch.node_ops.iter().enumerate() {
            if op == 0 || op > self.num_ops {
                out.push(Violation::OpCode { node: k + 1, op });
            }
        }
        out.extend(completeness_violations(arch));
        out
    }

    pub fn is_complete(&self, arch: &DagArchitecture) -> bool {
        arch.num_nodes >= 2 && completeness_violations(arch).is_empty()
    }
}

fn completeness_violations(arch: &DagArchitecture) -> Vec<Violation> {
    let n = arch.num_nodes;
    let fwd = arch.reachable_from_input();
    let bwd = arch.reaching_output();
    let mut out = Vec::new();
    if fwd & (1 << (n - 1)) == 0 {
        out.push(Violation::NoInputOutputPath);
    }
    for k in 1..n - 1 {
        if fwd & (1 << k) == 0 || bwd & (1 << k) == 0 {
            out.push(Violation::OffPath { node: k });
        }
    }
    out
}

/// A (partial) DAG architecture.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DagArchitecture {
    num_nodes: usize,
    /// Row bitmasks: bit `j` of row `i` is the edge `i -> j`.
    adjacency: Vec<u32>,
    /// Op codes of nodes `1..num_nodes-1`.
    node_ops: Vec<u8>,
}

impl DagArchitecture {
    /// Builds an architecture from an explicit edge list and intermediate ops.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)], node_ops: Vec<u8>) -> Result<Self, SpaceError> {
        if !(2..=DagSpace::MAX_SUPPORTED_NODES).contains(&num_nodes) {
            return Err(SpaceError::InvalidLimits(format!("num_nodes {num_nodes} out of range")));
        }
        if node_ops.len() != num_nodes - 2 {
            return Err(SpaceError::InvalidLimits(format!(
                "{num_nodes} nodes need {} intermediate ops, got {}",
                num_nodes - 2,
                node_ops.len()
            )));
        }
        let mut adjacency = vec![0u32; num_nodes];
        for &(from, to) in edges {
            if from >= to || to >= num_nodes {
                return Err(SpaceError::InvalidLimits(format!("edge {from}->{to} is not upper-triangular")));
            }
            adjacency[from] |= 1 << to;
        }
        Ok(Self {
            num_nodes,
            adjacency,
            node_ops,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn node_ops(&self) -> &[u8] {
        &self.node_ops
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.num_nodes && to < self.num_nodes && self.adjacency[from] & (1 << to) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for from in 0..self.num_nodes {
            for to in from + 1..self.num_nodes {
                if self.has_edge(from, to) {
                    out.push((from, to));
                }
            }
        }
        out
    }

    /// Longest INPUT->OUTPUT path measured in edges, `None` if OUTPUT is unreachable.
    pub fn longest_path(&self) -> Option<usize> {
        let n = self.num_nodes;
        let mut dist: Vec<Option<usize>> = vec![None; n];
        dist[0] = Some(0);
        for i in 0..n {
            let Some(d) = dist[i] else { continue };
            for j in i + 1..n {
                if self.has_edge(i, j) {
                    dist[j] = Some(dist[j].map_or(d + 1, |cur| cur.max(d + 1)));
                }
            }
        }
        dist[n - 1]
    }

    pub fn distinct_ops(&self) -> usize {
        let mut seen = self.node_ops.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    fn reachable_from_input(&self) -> u32 {
        let mut seen = 1u32;
        for i in 0..self.num_nodes {
            if seen & (1 << i) != 0 {
                seen |= self.adjacency[i];
            }
        }
        seen
    }

    fn reaching_output(&self) -> u32 {
        let n = self.num_nodes;
        let mut seen = 1u32 << (n - 1);
        for i in (0..n).rev() {
            if self.adjacency[i] & seen != 0 {
                seen |= 1 << i;
            }
        }
        seen
    }

    /// Inserts a new intermediate node directly before OUTPUT. Edges into
    /// OUTPUT follow OUTPUT to its new index; the new node has no edges.
    fn insert_node(&mut self, op: u8) {
        let old_out = self.num_nodes - 1;
        for row in &mut self.adjacency {
            if *row & (1 << old_out) != 0 {
                *row &= !(1 << old_out);
                *row |= 1 << (old_out + 1);
            }
        }
        self.adjacency.push(0);
        self.num_nodes += 1;
        self.node_ops.push(op);
    }

    /// Removes intermediate node `node` and its edges, shifting later nodes down.
    pub(crate) fn remove_node(&mut self, node: usize) {
        debug_assert!(node > 0 && node + 1 < self.num_nodes);
        let low_mask = (1u32 << node) - 1;
        self.adjacency.remove(node);
        for row in &mut self.adjacency {
            let low = *row & low_mask;
            let high = (*row >> (node + 1)) << node;
            *row = low | high;
        }
        self.num_nodes -= 1;
        self.node_ops.remove(node - 1);
    }

    /// Inserts an intermediate node at index `at` (1..=num_nodes-1) with no edges.
    pub(crate) fn insert_node_at(&mut self, at: usize, op: u8) {
        debug_assert!(at >= 1 && at < self.num_nodes);
        let low_mask = (1u32 << at) - 1;
        for row in &mut self.adjacency {
            let low = *row & low_mask;
            let high = (*row >> at) << (at + 1);
            *row = low | high;
        }
        self.adjacency.insert(at, 0);
        self.num_nodes += 1;
        self.node_ops.insert(at - 1, op);
    }

    pub(crate) fn toggle_edge(&mut self, from: usize, to: usize) {
        self.adjacency[from] ^= 1 << to;
    }

    pub(crate) fn set_op(&mut self, node: usize, op: u8) {
        self.node_ops[node - 1] = op;
    }
}
