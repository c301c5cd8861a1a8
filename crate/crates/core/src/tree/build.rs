use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{KeyChange, NodeId, Partition, PartitionSet, RegulusTree, TreeError};
use crate::msc::{BasePartition, CancellationSequence, CellKey};

struct SeqNode {
    persistence: f64,
    key: CellKey,
    children: Option<[u32; 2]>,
    key_changes: Vec<KeyChange>,
}

/// Replay a cancellation sequence into a tree.
///
/// Base partitions become leaves at persistence 0 and every merge record
/// creates a parent at the step's persistence. Ids are then assigned in
/// depth-first pre-order (root is 0), and points are enumerated leaf by
/// leaf, in original index order within a leaf, so every node owns a
/// contiguous range.
pub fn build_regulus_tree(
    parts: &[BasePartition],
    seq: &CancellationSequence,
) -> Result<RegulusTree, TreeError> {
    if parts.is_empty() {
        return Err(TreeError::Empty);
    }
    let mut nodes: Vec<SeqNode> = parts
        .iter()
        .map(|p| SeqNode {
            persistence: 0.0,
            key: p.key,
            children: None,
            key_changes: Vec::new(),
        })
        .collect();
    let mut alive = vec![true; nodes.len()];
    for step in &seq.steps {
        for m in &step.merges {
            for id in [m.first, m.second] {
                match alive.get_mut(id as usize) {
                    Some(a) if *a => *a = false,
                    _ => return Err(TreeError::UnknownPartition(id)),
                }
            }
            if m.merged as usize != nodes.len() {
                return Err(TreeError::UnknownPartition(m.merged));
            }
            nodes.push(SeqNode {
                persistence: step.persistence,
                key: m.key,
                children: Some([m.first, m.second]),
                key_changes: Vec::new(),
            });
            alive.push(true);
        }
        for r in &step.relabels {
            if !alive.get(r.partition as usize).copied().unwrap_or(false) {
                return Err(TreeError::UnknownPartition(r.partition));
            }
            nodes[r.partition as usize].key_changes.push(KeyChange {
                persistence: step.persistence,
                min_ext: r.key.0,
                max_ext: r.key.1,
            });
        }
    }
    let roots: Vec<usize> = (0..nodes.len()).filter(|&i| alive[i]).collect();
    if roots.len() != 1 {
        return Err(TreeError::NotSingleRoot(roots.len()));
    }

    // Pre-order walk: assign ids and enumerate leaf points.
    let n: usize = parts.iter().map(|p| p.points.len()).sum();
    let mut order: Vec<usize> = Vec::with_capacity(nodes.len());
    let mut new_id = vec![u32::MAX; nodes.len()];
    let mut ranges = vec![(0u32, 0u32); nodes.len()];
    let mut permutation = Vec::with_capacity(n);
    let mut stack = vec![roots[0]];
    while let Some(s) = stack.pop() {
        new_id[s] = order.len() as u32;
        order.push(s);
        match nodes[s].children {
            Some([a, b]) => {
                stack.push(b as usize);
                stack.push(a as usize);
            }
            None => {
                let lo = permutation.len() as u32;
                permutation.extend_from_slice(&parts[s].points);
                ranges[s] = (lo, permutation.len() as u32);
            }
        }
    }
    for &s in order.iter().rev() {
        if let Some([a, b]) = nodes[s].children {
            ranges[s] = (ranges[a as usize].0, ranges[b as usize].1);
        }
    }

    let mut position = vec![0u32; permutation.len()];
    for (pos, &p) in permutation.iter().enumerate() {
        position[p as usize] = pos as u32;
    }
    let mut partitions = Vec::with_capacity(order.len());
    let mut wiring: Vec<(NodeId, Option<NodeId>)> = Vec::with_capacity(order.len());
    let mut parent_of = vec![None; nodes.len()];
    for &s in &order {
        if let Some([a, b]) = nodes[s].children {
            parent_of[a as usize] = Some(new_id[s]);
            parent_of[b as usize] = Some(new_id[s]);
        }
    }
    for &s in &order {
        let node = &nodes[s];
        let (lo, hi) = ranges[s];
        let mut extra = Vec::new();
        for e in [node.key.0, node.key.1] {
            let pos = position[e as usize];
            if (pos < lo || pos >= hi) && !extra.contains(&e) {
                extra.push(e);
            }
        }
        partitions.push(Partition {
            id: new_id[s],
            persistence: node.persistence,
            lo,
            hi,
            min_ext: node.key.0,
            max_ext: node.key.1,
            extra_criticals: extra,
            key_changes: node.key_changes.clone(),
        });
        wiring.push((new_id[s], parent_of[s]));
    }
    let shared = Arc::new(PartitionSet::new(partitions, permutation)?);
    RegulusTree::from_parents(shared, &wiring, None)
}
