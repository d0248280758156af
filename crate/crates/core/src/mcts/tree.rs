use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ucb_score, MctsError};
use crate::space::{Action, EncodedArch, Space, State};

pub type NodeId = usize;

/// Statistics of one outgoing action of a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub action: Action,
    pub q_sum: f64,
    pub visits: u64,
    pub child: Option<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<NodeId>,
    /// Index of the edge in the parent that leads here.
    pub parent_edge: Option<usize>,
    pub state: State,
    pub encoding: EncodedArch,
    pub edges: Vec<EdgeStats>,
    /// Cached `N(s)`, the sum of the edge visit counts.
    pub visits: u64,
    pub depth: usize,
}

impl Node {
    fn new(space: &Space, state: State, parent: Option<(NodeId, usize)>, depth: usize) -> Self {
        let edges = space
            .actions(&state)
            .into_iter()
            .map(|action| EdgeStats {
                action,
                q_sum: 0.0,
                visits: 0,
                child: None,
            })
            .collect();
        Node {
            parent: parent.map(|p| p.0),
            parent_edge: parent.map(|p| p.1),
            encoding: space.encode(&state.arch),
            state,
            edges,
            visits: 0,
            depth,
        }
    }
}

/// Arena-allocated search tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    nodes: Vec<Node>,
}

impl SearchTree {
    pub const ROOT: NodeId = 0;

    pub fn new(space: &Space) -> Self {
        Self {
            nodes: vec![Node::new(space, space.root(), None, 0)],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[Self::ROOT]
    }

    /// Walks down from the root by UCB1 and returns the `(node, edge)` path.
    ///
    /// The walk stops at the first edge without a child or whose child is
    /// terminal. Ties go to the lowest edge index. The path is empty only
    /// when the root has no actions.
    pub fn select(&self, c: f64) -> Vec<(NodeId, usize)> {
        self.select_within(c, usize::MAX)
    }

    /// Like [`select`](Self::select), but nodes at `max_depth` are leaves.
    pub fn select_within(&self, c: f64, max_depth: usize) -> Vec<(NodeId, usize)> {
        let mut path = Vec::new();
        let mut current = Self::ROOT;
        loop {
            let node = &self.nodes[current];
            let Some(best) = best_edge(node, c) else {
                return path;
            };
            path.push((current, best));
            match node.edges[best].child {
                Some(child)
                    if !self.nodes[child].state.terminal
                        && !self.nodes[child].edges.is_empty()
                        && self.nodes[child].depth < max_depth =>
                {
                    current = child;
                }
                _ => return path,
            }
        }
    }

    /// Creates the child reached through `edge` of `parent`.
    pub fn expand(&mut self, space: &Space, parent: NodeId, edge: usize) -> Result<NodeId, MctsError> {
        let p = &self.nodes[parent];
        if p.edges[edge].child.is_some() {
            return Err(MctsError::AlreadyExpanded { node: parent, action: edge });
        }
        let state = space.apply_unchecked(&p.state, &p.edges[edge].action);
        let id = self.nodes.len();
        let node = Node::new(space, state, Some((parent, edge)), p.depth + 1);
        self.nodes.push(node);
        self.nodes[parent].edges[edge].child = Some(id);
        Ok(id)
    }

    /// Adds `q` and `n` to every edge from `from` up to the root.
    pub fn backpropagate(&mut self, from: NodeId, q: f64, n: u64) {
        let mut current = from;
        while let (Some(parent), Some(edge)) = (self.nodes[current].parent, self.nodes[current].parent_edge) {
            let p = &mut self.nodes[parent];
            p.edges[edge].q_sum += q;
            p.edges[edge].visits += n;
            p.visits += n;
            current = parent;
        }
    }

    /// Ancestors of `id`, starting with `id` itself and ending at the root.
    pub fn lineage(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(Some(id), move |&n| self.nodes[n].parent)
    }

    /// Tab-separated dump: `node_id, parent_id, action, q_sum, visits,
    /// encoding`, where `q_sum`/`visits` are those of the incoming edge (the
    /// root reports its totals).
    pub fn dump(&self) -> String {
        let mut out = String::from("node_id\tparent_id\taction\tq_sum\tvisits\tencoding\n");
        for (id, node) in self.nodes.iter().enumerate() {
            match (node.parent, node.parent_edge) {
                (Some(parent), Some(edge)) => {
                    let e = &self.nodes[parent].edges[edge];
                    let _ = writeln!(
                        out,
                        "{id}\t{parent}\t{}\t{}\t{}\t{}",
                        e.action, e.q_sum, e.visits, node.encoding
                    );
                }
                _ => {
                    let q: f64 = node.edges.iter().map(|e| e.q_sum).sum();
                    let _ = writeln!(out, "{id}\t-\t-\t{q}\t{}\t{}", node.visits, node.encoding);
                }
            }
        }
        out
    }
}

fn best_edge(node: &Node, c: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in node.edges.iter().enumerate() {
        let score = ucb_score(e.q_sum, e.visits, node.visits, c);
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_edge(tree: &mut SearchTree, node: NodeId, edge: usize, q: f64, n: u64) {
        let nd = &mut tree.nodes[node];
        nd.edges[edge].q_sum = q;
        nd.edges[edge].visits = n;
        nd.visits = nd.edges.iter().map(|e| e.visits).sum();
    }

    #[test]
    fn fresh_root_selects_first_action() {
        let space = Space::dag(3, 1);
        let tree = SearchTree::new(&space);
        assert_eq!(tree.root().edges.len(), 3);
        assert_eq!(tree.select(0.5), vec![(0, 0)]);
    }

    #[test]
    fn selection_prefers_exploration_bonus() {
        let space = Space::dag(3, 1);
        let mut tree = SearchTree::new(&space);
        // Drop the terminate edge so only the two visited edges compete.
        set_edge(&mut tree, 0, 0, 0.0, 0);
        set_edge(&mut tree, 0, 1, 0.9, 3);
        set_edge(&mut tree, 0, 2, 0.2, 1);
        tree.nodes[0].edges.remove(0);
        tree.nodes[0].visits = 4;
        assert_eq!(tree.select(0.5), vec![(0, 1)]);
        assert_eq!(tree.select(0.0), vec![(0, 0)]);
    }

    #[test]
    fn expand_initialises_zero_stats() {
        let space = Space::dag(3, 1);
        let mut tree = SearchTree::new(&space);
        let child = tree.expand(&space, 0, 1).unwrap();
        let node = tree.node(child);
        assert_eq!(node.visits, 0);
        assert!(node.edges.iter().all(|e| e.visits == 0 && e.q_sum == 0.0));
        assert!(matches!(
            tree.expand(&space, 0, 1),
            Err(MctsError::AlreadyExpanded { node: 0, action: 1 })
        ));
        let term = tree.expand(&space, 0, 0).unwrap();
        assert!(tree.node(term).state.terminal);
        assert!(tree.node(term).edges.is_empty());
    }

    #[test]
    fn backprop_updates_each_edge_on_path() {
        let space = Space::dag(4, 1);
        let mut tree = SearchTree::new(&space);
        let a = tree.expand(&space, 0, 1).unwrap();
        let b = tree.expand(&space, a, 1).unwrap();
        let c = tree.expand(&space, b, 1).unwrap();
        tree.backpropagate(c, 0.85, 1);
        for (node, edge) in [(0, 1), (a, 1), (b, 1)] {
            assert_eq!(tree.node(node).edges[edge].q_sum, 0.85);
            assert_eq!(tree.node(node).edges[edge].visits, 1);
            assert_eq!(tree.node(node).visits, 1);
        }
        let before = tree.clone();
        tree.backpropagate(c, 0.0, 0);
        assert_eq!(tree, before);
    }

    #[test]
    fn split_backprop_matches_single_update() {
        let space = Space::dag(4, 1);
        let mut split = SearchTree::new(&space);
        let a = split.expand(&space, 0, 1).unwrap();
        let b = split.expand(&space, a, 2).unwrap();
        let mut direct = split.clone();
        split.backpropagate(b, 0.8, 1);
        split.backpropagate(b, (0.9 - 0.8) / 2.0, 0);
        direct.backpropagate(b, 0.85, 1);
        for (s, d) in split.nodes().iter().zip(direct.nodes()) {
            for (es, ed) in s.edges.iter().zip(&d.edges) {
                assert_eq!(es.visits, ed.visits);
                assert!((es.q_sum - ed.q_sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dump_lists_every_node() {
        let space = Space::dag(3, 1);
        let mut tree = SearchTree::new(&space);
        let a = tree.expand(&space, 0, 2).unwrap();
        tree.backpropagate(a, 0.5, 1);
        let dump = tree.dump();
        let lines: Vec<_> = dump.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "0\t-\t-\t0.5\t1\t0-0-0-0-0-0-0-0-0-2-3-0");
        assert_eq!(lines[2], "1\t0\tadd_edge(0;1)\t0.5\t1\t0-1-0-0-0-0-0-0-0-2-3-0");
    }
}
