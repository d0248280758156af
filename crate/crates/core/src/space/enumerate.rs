//! Exhaustive enumeration of complete DAG architectures, used as the
//! brute-force oracle for optima and benchmark tables.

use std::collections::HashSet;

use super::{DagArchitecture, DagSpace, SpaceError};
use crate::hash::Fnv1a64;

pub const DEFAULT_ENUMERATION_CAP: u128 = 5_000_000;

#[derive(Clone, Debug)]
pub struct EnumerateOptions {
    /// Refuse to enumerate when the raw candidate count exceeds this.
    pub cap: u128,
    /// Keep one representative per [`canonical_hash`] class.
    pub dedup_isomorphic: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            dedup_isomorphic: false,
        }
    }
}

/// Number of raw candidates (op assignments x upper-triangular adjacency
/// subsets) the enumerator has to inspect.
pub fn estimated_space_size(space: &DagSpace) -> u128 {
    (2..=space.max_nodes)
        .map(|n| {
            let pairs = (n * (n - 1) / 2) as u32;
            let ops = u128::from(space.num_ops).checked_pow((n - 2) as u32).unwrap_or(u128::MAX);
            ops.saturating_mul(2u128.checked_pow(pairs).unwrap_or(u128::MAX))
        })
        .fold(0u128, u128::saturating_add)
}

/// Streams every distinct complete architecture within the limits, ordered
/// by node count, then op assignment, then adjacency bitmask.
pub fn enumerate_space(
    space: &DagSpace,
    opts: &EnumerateOptions,
) -> Result<impl Iterator<Item = DagArchitecture>, SpaceError> {
    space.check()?;
    let estimated = estimated_space_size(space);
    if estimated > opts.cap {
        return Err(SpaceError::SpaceTooLarge {
            estimated,
            cap: opts.cap,
        });
    }
    let space = space.clone();
    let max_edges = space.max_edges.unwrap_or(usize::MAX);
    let num_ops = space.num_ops;
    let raw = (2..=space.max_nodes).flat_map(move |n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let op_count = u64::from(num_ops).pow((n - 2) as u32);
        (0..op_count).flat_map(move |op_index| {
            let ops = op_assignment(op_index, n - 2, num_ops);
            let pairs = pairs.clone();
            (0u64..1 << pairs.len()).filter_map(move |mask| {
                if mask.count_ones() as usize > max_edges {
                    return None;
                }
                let edges: Vec<_> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| mask >> t & 1 == 1)
                    .map(|(_, &p)| p)
                    .collect();
                let arch = DagArchitecture::from_edges(n, &edges, ops.clone()).ok()?;
                space_is_complete(&arch).then_some(arch)
            })
        })
    });
    let mut seen = HashSet::new();
    let dedup = opts.dedup_isomorphic;
    Ok(raw.filter(move |a| !dedup || seen.insert(canonical_hash(a))))
}

fn space_is_complete(arch: &DagArchitecture) -> bool {
    // Completeness does not depend on limits beyond the ones enforced by construction.
    DagSpace::new(arch.num_nodes(), u8::MAX - 2).is_complete(arch)
}

/// Mixed-radix decode of `index` into `len` op codes in `1..=num_ops`,
/// most significant digit first.
fn op_assignment(mut index: u64, len: usize, num_ops: u8) -> Vec<u8> {
    let mut ops = vec![1u8; len];
    for slot in ops.iter_mut().rev() {
        *slot = (index % u64::from(num_ops)) as u8 + 1;
        index /= u64::from(num_ops);
    }
    ops
}

/// Isomorphism-invariant hash by iterated neighbourhood relabelling.
///
/// Isomorphic graphs always hash equal; distinct classes collide only with
/// hash-collision probability, so this is a heuristic canonical form.
pub fn canonical_hash(arch: &DagArchitecture) -> u64 {
    let n = arch.num_nodes();
    let mut labels: Vec<u64> = (0..n)
        .map(|i| {
            if i == 0 {
                u64::MAX
            } else if i + 1 == n {
                u64::MAX - 1
            } else {
                u64::from(arch.node_ops()[i - 1])
            }
        })
        .collect();
    for _ in 0..n {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut ins: Vec<u64> = (0..n).filter(|&j| arch.has_edge(j, i)).map(|j| labels[j]).collect();
                let mut outs: Vec<u64> = (0..n).filter(|&j| arch.has_edge(i, j)).map(|j| labels[j]).collect();
                ins.sort_unstable();
                outs.sort_unstable();
                let mut h = Fnv1a64::default();
                h.write_u64(labels[i]);
                h.write_u64(ins.len() as u64);
                ins.iter().for_each(|&l| h.write_u64(l));
                h.write_u64(outs.len() as u64);
                outs.iter().for_each(|&l| h.write_u64(l));
                h.finish()
            })
            .collect();
        labels = next;
    }
    labels.sort_unstable();
    let mut h = Fnv1a64::default();
    h.write_u64(n as u64);
    labels.iter().for_each(|&l| h.write_u64(l));
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(max_nodes: usize, ops: u8) -> usize {
        enumerate_space(&DagSpace::new(max_nodes, ops), &EnumerateOptions::default())
            .unwrap()
            .count()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(2, 1), 1);
        assert_eq!(count(3, 1), 3);
        assert_eq!(count(4, 2), 45);
    }

    #[test]
    fn two_nodes_is_single_edge() {
        let all: Vec<_> = enumerate_space(&DagSpace::new(2, 1), &EnumerateOptions::default())
            .unwrap()
            .collect();
        assert_eq!(all[0].edges(), vec![(0, 1)]);
    }

    #[test]
    fn guard_refuses_large_spaces() {
        let opts = EnumerateOptions {
            cap: 1000,
            dedup_isomorphic: false,
        };
        assert!(matches!(
            enumerate_space(&DagSpace::new(5, 3), &opts),
            Err(SpaceError::SpaceTooLarge { .. })
        ));
        assert!(enumerate_space(&DagSpace::new(3, 1), &opts).is_ok());
    }

    #[test]
    fn edge_cap_is_respected() {
        let space = DagSpace::new(4, 1).with_max_edges(3);
        let all: Vec<_> = enumerate_space(&space, &EnumerateOptions::default()).unwrap().collect();
        assert!(all.iter().all(|a| a.edge_count() <= 3));
        assert!(all.len() < count(4, 1));
    }

    #[test]
    fn isomorphic_graphs_share_a_hash() {
        // Two parallel intermediate nodes, ops swapped by relabelling.
        let a = DagArchitecture::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], vec![1, 2]).unwrap();
        let b = DagArchitecture::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], vec![2, 1]).unwrap();
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
        let c = DagArchitecture::from_edges(4, &[(0, 1), (1, 2), (2, 3)], vec![1, 2]).unwrap();
        assert_ne!(canonical_hash(&a), canonical_hash(&c));
        let dedup = EnumerateOptions {
            dedup_isomorphic: true,
            ..Default::default()
        };
        let n = enumerate_space(&DagSpace::new(4, 2), &dedup).unwrap().count();
        assert!(n < 45 && n > 0);
    }
}
