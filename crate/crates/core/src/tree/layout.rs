use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{NodeId, RegulusTree};

/// A node's rectangle: horizontal extent from its point range, bottom at
/// its creation persistence, top at its parent's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutRect {
    pub node: NodeId,
    pub x: u32,
    pub width: u32,
    pub y: f64,
    pub height: f64,
}

/// One rectangle per node, in pre-order. The root extends to 1.0.
pub fn layout_tree(tree: &RegulusTree) -> Vec<LayoutRect> {
    tree.nodes()
        .map(|id| {
            let p = tree.partition(id);
            LayoutRect {
                node: id,
                x: p.lo,
                width: p.len(),
                y: p.persistence,
                height: tree.lifespan(id),
            }
        })
        .collect()
}
