//! The Regulus Tree: every partition of the simplification hierarchy as a
//! node, with its points stored as a contiguous range of one global point
//! permutation.
//!
//! Partition records live in a shared [`PartitionSet`]. A [`RegulusTree`] is
//! only the parent/child wiring over those records, so derived trees
//! (see [`reduce_tree`]) are cheap views that keep node ids equal to
//! partition ids.

mod build;
mod layout;
mod reduce;
mod select;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::build_regulus_tree;
pub use layout::{layout_tree, LayoutRect};
pub use reduce::{reduce_tree, ReduceFilter};
pub use select::{
    cut_at_persistence, select_step_line, validate_selection, Selection, SelectionMode, Step,
};

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("merge references unknown or already merged partition {0}")]
    UnknownPartition(u32),
    #[error("sequence leaves {0} partitions, expected exactly one")]
    NotSingleRoot(usize),
    #[error("no base partitions")]
    Empty,
    #[error("persistence {0} outside [0, 1]")]
    PersistenceOutOfRange(f64),
    #[error("step line does not tile [0, {n}): {reason}")]
    StepsNotTiling { n: u32, reason: &'static str },
    #[error("node {descendant} is a descendant of selected node {ancestor}")]
    AncestorConflict {
        ancestor: NodeId,
        descendant: NodeId,
    },
    #[error("selection does not tile the point range")]
    SelectionNotTiling,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("the root cannot be removed")]
    RootRemoved,
    #[error("invalid tree wiring: {0}")]
    InvalidWiring(&'static str),
}

/// The key a partition takes on when one of its extrema is cancelled
/// without a merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeyChange {
    pub persistence: f64,
    pub min_ext: u32,
    pub max_ext: u32,
}

/// A partition record, shared by every tree that refers to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Partition {
    pub id: NodeId,
    /// Normalized persistence at which the partition is created.
    pub persistence: f64,
    /// Half-open range `[lo, hi)` into the point permutation.
    pub lo: u32,
    pub hi: u32,
    pub min_ext: u32,
    pub max_ext: u32,
    /// Associated extrema whose points lie outside `[lo, hi)`.
    pub extra_criticals: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub key_changes: Vec<KeyChange>,
}

impl Partition {
    pub fn len(&self) -> u32 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    /// Points including associated extrema outside the range.
    pub fn exact_point_count(&self) -> u32 {
        self.len() + self.extra_criticals.len() as u32
    }

    /// `(min, max)` extrema in effect at persistence `level`.
    pub fn key_at(&self, level: f64) -> (u32, u32) {
        self.key_changes
            .iter()
            .take_while(|k| k.persistence <= level)
            .last()
            .map_or((self.min_ext, self.max_ext), |k| (k.min_ext, k.max_ext))
    }
}

/// Partition records plus the point enumeration they index into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartitionSet")]
pub struct PartitionSet {
    partitions: Vec<Partition>,
    /// Display position -> original point index.
    permutation: Vec<u32>,
    #[serde(skip)]
    position: Vec<u32>,
}

#[derive(Deserialize)]
struct RawPartitionSet {
    partitions: Vec<Partition>,
    permutation: Vec<u32>,
}

impl TryFrom<RawPartitionSet> for PartitionSet {
    type Error = TreeError;

    fn try_from(raw: RawPartitionSet) -> Result<Self, TreeError> {
        Self::new(raw.partitions, raw.permutation)
    }
}

impl PartitionSet {
    pub fn new(partitions: Vec<Partition>, permutation: Vec<u32>) -> Result<Self, TreeError> {
        let n = permutation.len();
        let mut position = vec![u32::MAX; n];
        for (pos, &p) in permutation.iter().enumerate() {
            let slot = position
                .get_mut(p as usize)
                .ok_or(TreeError::InvalidWiring("permutation entry out of range"))?;
            if *slot != u32::MAX {
                return Err(TreeError::InvalidWiring("permutation is not a bijection"));
            }
            *slot = pos as u32;
        }
        for (i, part) in partitions.iter().enumerate() {
            if part.id as usize != i {
                return Err(TreeError::InvalidWiring("partition ids must be dense"));
            }
            if part.lo >= part.hi || part.hi as usize > n {
                return Err(TreeError::InvalidWiring("partition range out of bounds"));
            }
        }
        Ok(Self {
            partitions,
            permutation,
            position,
        })
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn get(&self, id: NodeId) -> Option<&Partition> {
        self.partitions.get(id as usize)
    }

    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    /// Display position of an original point index.
    pub fn position(&self, point: u32) -> u32 {
        self.position[point as usize]
    }

    pub fn point_count(&self) -> usize {
        self.permutation.len()
    }

    /// Original point indices of a partition.
    pub fn points(&self, id: NodeId) -> &[u32] {
        let p = &self.partitions[id as usize];
        &self.permutation[p.lo as usize..p.hi as usize]
    }
}

/// One view over a [`PartitionSet`].
#[derive(Debug, Clone)]
pub struct RegulusTree {
    shared: Arc<PartitionSet>,
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    present: Vec<bool>,
    count: usize,
    source: Option<Arc<RegulusTree>>,
}

impl RegulusTree {
    /// Wire a tree from `(node, parent)` pairs. Children are ordered by
    /// range start.
    pub fn from_parents(
        shared: Arc<PartitionSet>,
        entries: &[(NodeId, Option<NodeId>)],
        source: Option<Arc<RegulusTree>>,
    ) -> Result<Self, TreeError> {
        let p = shared.partitions.len();
        let mut parent = vec![None; p];
        let mut present = vec![false; p];
        let mut root = None;
        for &(id, par) in entries {
            if id as usize >= p {
                return Err(TreeError::UnknownNode(id));
            }
            if present[id as usize] {
                return Err(TreeError::InvalidWiring("duplicate node"));
            }
            present[id as usize] = true;
            parent[id as usize] = par;
            if par.is_none() {
                if root.is_some() {
                    return Err(TreeError::InvalidWiring("more than one root"));
                }
                root = Some(id);
            }
        }
        let root = root.ok_or(TreeError::InvalidWiring("no root"))?;
        let mut children = vec![Vec::new(); p];
        for &(id, par) in entries {
            if let Some(par) = par {
                if !present.get(par as usize).copied().unwrap_or(false) {
                    return Err(TreeError::InvalidWiring("parent not in tree"));
                }
                let (pp, cp) = (
                    &shared.partitions[par as usize],
                    &shared.partitions[id as usize],
                );
                if cp.lo < pp.lo || cp.hi > pp.hi || cp.persistence > pp.persistence {
                    return Err(TreeError::InvalidWiring("child not nested in parent"));
                }
                children[par as usize].push(id);
            }
        }
        for list in &mut children {
            list.sort_by_key(|&c| shared.partitions[c as usize].lo);
            if list
                .windows(2)
                .any(|w| shared.partitions[w[0] as usize].hi > shared.partitions[w[1] as usize].lo)
            {
                return Err(TreeError::InvalidWiring("sibling ranges overlap"));
            }
        }
        let tree = Self {
            shared,
            root,
            parent,
            children,
            present,
            count: entries.len(),
            source,
        };
        // Reject cycles: everything must be reachable from the root.
        if tree.preorder().len() != tree.count {
            return Err(TreeError::InvalidWiring("nodes unreachable from root"));
        }
        Ok(tree)
    }

    pub fn shared(&self) -> &Arc<PartitionSet> {
        &self.shared
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of nodes in this view.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn point_count(&self) -> usize {
        self.shared.point_count()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.present.get(id as usize).copied().unwrap_or(false)
    }

    pub fn check(&self, id: NodeId) -> Result<(), TreeError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(TreeError::UnknownNode(id))
        }
    }

    pub fn partition(&self, id: NodeId) -> &Partition {
        &self.shared.partitions[id as usize]
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent[id as usize]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id as usize]
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children[id as usize].is_empty()
    }

    /// Node ids in ascending order, which is also depth-first pre-order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.present.len() as u32).filter(|&i| self.present[i as usize])
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&i| self.is_leaf(i))
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.count);
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.children(id).iter().rev());
        }
        out
    }

    pub fn points(&self, id: NodeId) -> &[u32] {
        self.shared.points(id)
    }

    pub fn permutation(&self) -> &[u32] {
        &self.shared.permutation
    }

    /// Persistence at which the node merges into its parent; 1.0 for the
    /// root.
    pub fn destruction(&self, id: NodeId) -> f64 {
        self.parent(id)
            .map_or(1.0, |p| self.partition(p).persistence)
    }

    /// Lifespan relative to this tree's wiring.
    pub fn lifespan(&self, id: NodeId) -> f64 {
        self.destruction(id) - self.partition(id).persistence
    }

    pub fn is_ancestor(&self, ancestor: NodeId, mut node: NodeId) -> bool {
        while let Some(p) = self.parent(node) {
            if p == ancestor {
                return true;
            }
            node = p;
        }
        false
    }

    /// The tree this one was derived from.
    pub fn source(&self) -> Option<&Arc<RegulusTree>> {
        self.source.as_ref()
    }

    /// `(node, parent)` pairs in pre-order; enough to rebuild the wiring
    /// with [`RegulusTree::from_parents`].
    pub fn wiring(&self) -> Vec<(NodeId, Option<NodeId>)> {
        self.nodes().map(|id| (id, self.parent(id))).collect()
    }

    pub fn tooltip(&self, id: NodeId, measure: Option<f64>) -> Result<Tooltip, TreeError> {
        self.check(id)?;
        let part = self.partition(id);
        Ok(Tooltip {
            id,
            width: part.len(),
            point_count: part.exact_point_count(),
            persistence: part.persistence,
            lifespan: self.lifespan(id),
            measure,
        })
    }
}

/// Hover payload for a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tooltip {
    pub id: NodeId,
    /// Points in the node's range (its drawn width).
    pub width: u32,
    /// Exact count, including associated extrema outside the range.
    pub point_count: u32,
    pub persistence: f64,
    pub lifespan: f64,
    pub measure: Option<f64>,
}
