use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{NodeId, RegulusTree, TreeError};
use crate::dataset::Dataset;

/// Derive a new tree keeping only nodes accepted by `keep`.
///
/// Children of removed nodes attach to their nearest kept ancestor. Removed
/// leaves simply leave their columns without a leaf (a jagged bottom). The
/// partition records are shared with `tree`, which becomes the new tree's
/// source; `keep` is evaluated against `tree`.
pub fn reduce_tree<F>(tree: &Arc<RegulusTree>, keep: F) -> Result<RegulusTree, TreeError>
where
    F: Fn(&RegulusTree, NodeId) -> bool,
{
    let root = tree.root();
    if !keep(tree, root) {
        return Err(TreeError::RootRemoved);
    }
    let mut entries: Vec<(NodeId, Option<NodeId>)> = Vec::with_capacity(tree.len());
    // (node, nearest kept ancestor)
    let mut stack = vec![(root, None::<NodeId>)];
    while let Some((id, kept_above)) = stack.pop() {
        let kept = id == root || keep(tree, id);
        let next_above = if kept {
            entries.push((id, kept_above));
            Some(id)
        } else {
            kept_above
        };
        for &c in tree.children(id).iter().rev() {
            stack.push((c, next_above));
        }
    }
    RegulusTree::from_parents(tree.shared().clone(), &entries, Some(tree.clone()))
}

/// The standard removal rules. A node is kept only if it passes every
/// configured rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReduceFilter {
    /// Minimum number of points in the node's range.
    pub min_points: Option<u32>,
    /// Minimum lifespan in the tree being reduced.
    pub min_lifespan: Option<f64>,
    /// Keep only nodes whose active-output values, in original units,
    /// overlap `[lo, hi]`.
    pub value_range: Option<(f64, f64)>,
}

impl ReduceFilter {
    pub fn keeps(&self, tree: &RegulusTree, data: &Dataset, id: NodeId) -> bool {
        let part = tree.partition(id);
        if self.min_points.is_some_and(|m| part.len() < m) {
            return false;
        }
        if self.min_lifespan.is_some_and(|m| tree.lifespan(id) < m) {
            return false;
        }
        if let Some((lo, hi)) = self.value_range {
            let values = data.values();
            let (vmin, vmax) =
                tree.points(id)
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
                        let v = values[p as usize];
                        (a.min(v), b.max(v))
                    });
            if data.value_to_raw(vmax) < lo || data.value_to_raw(vmin) > hi {
                return false;
            }
        }
        true
    }

    pub fn apply(&self, tree: &Arc<RegulusTree>, data: &Dataset) -> Result<RegulusTree, TreeError> {
        reduce_tree(tree, |t, id| self.keeps(t, data, id))
    }
}
