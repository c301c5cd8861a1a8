use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{NodeId, RegulusTree, TreeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// A single horizontal persistence line.
    GlobalLine,
    /// A stepped line, one persistence level per column interval.
    StepLine,
    /// Hand-picked partitions, no two nested.
    Discrete,
    /// Hand-picked partitions, nesting allowed.
    NonConsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub nodes: BTreeSet<NodeId>,
    pub mode: SelectionMode,
}

impl Selection {
    /// Whether the selected ranges are disjoint and cover `[0, n)`.
    pub fn tiles(&self, tree: &RegulusTree) -> bool {
        let mut ranges: Vec<(u32, u32)> = self
            .nodes
            .iter()
            .map(|&id| (tree.partition(id).lo, tree.partition(id).hi))
            .collect();
        ranges.sort_unstable();
        let mut cursor = 0;
        for (lo, hi) in ranges {
            if lo != cursor {
                return false;
            }
            cursor = hi;
        }
        cursor as usize == tree.point_count()
    }
}

/// Column interval `[lo, hi)` of a step line and its persistence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub lo: u32,
    pub hi: u32,
    pub persistence: f64,
}

fn check_level(p: f64) -> Result<(), TreeError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TreeError::PersistenceOutOfRange(p))
    }
}

/// Nodes alive at persistence `p`: created at or below `p` and destroyed
/// above it. The root is selected for any `p` at or above its creation.
pub fn cut_at_persistence(tree: &RegulusTree, p: f64) -> Result<Selection, TreeError> {
    check_level(p)?;
    let mut nodes = BTreeSet::new();
    let mut stack = alloc::vec![tree.root()];
    while let Some(id) = stack.pop() {
        if tree.partition(id).persistence <= p {
            nodes.insert(id);
        } else {
            stack.extend_from_slice(tree.children(id));
        }
    }
    Ok(Selection {
        nodes,
        mode: SelectionMode::GlobalLine,
    })
}

/// Cut each column interval at its own level.
///
/// Where one interval's cut picks a node that contains a node picked by
/// another interval, the deeper node wins and the remainder of the
/// ancestor's columns is filled with its largest descendants that contain
/// no other pick. The result still tiles `[0, n)` and uses only existing
/// partitions.
pub fn select_step_line(tree: &RegulusTree, steps: &[Step]) -> Result<Selection, TreeError> {
    let n = tree.point_count() as u32;
    let mut sorted = steps.to_vec();
    sorted.sort_by_key(|s| s.lo);
    let mut cursor = 0;
    for s in &sorted {
        check_level(s.persistence)?;
        if s.lo >= s.hi {
            return Err(TreeError::StepsNotTiling {
                n,
                reason: "empty interval",
            });
        }
        if s.lo != cursor {
            return Err(TreeError::StepsNotTiling {
                n,
                reason: "gap or overlap",
            });
        }
        cursor = s.hi;
    }
    if cursor != n {
        return Err(TreeError::StepsNotTiling {
            n,
            reason: "does not reach n",
        });
    }

    let mut picked = BTreeSet::new();
    for s in &sorted {
        for id in cut_at_persistence(tree, s.persistence)?.nodes {
            let part = tree.partition(id);
            if part.lo < s.hi && part.hi > s.lo {
                picked.insert(id);
            }
        }
    }

    // Mark every node that has a picked strict descendant.
    let mut covers = alloc::vec![false; tree.shared().partitions().len()];
    for &id in &picked {
        let mut node = id;
        while let Some(p) = tree.parent(node) {
            if covers[p as usize] {
                break;
            }
            covers[p as usize] = true;
            node = p;
        }
    }

    let mut nodes = BTreeSet::new();
    let mut stack = alloc::vec![tree.root()];
    while let Some(id) = stack.pop() {
        if covers[id as usize] {
            stack.extend_from_slice(tree.children(id));
        } else {
            // Either picked itself, or a maximal subtree under an
            // expanded ancestor.
            nodes.insert(id);
        }
    }
    Ok(Selection {
        nodes,
        mode: SelectionMode::StepLine,
    })
}

/// Check a hand-built selection against the rules of `mode`.
///
/// Discrete (and line) selections may not nest; non-consistent ones may.
/// Line modes must also tile the point range.
pub fn validate_selection(
    tree: &RegulusTree,
    nodes: &BTreeSet<NodeId>,
    mode: SelectionMode,
) -> Result<Selection, TreeError> {
    for &id in nodes {
        tree.check(id)?;
    }
    if mode != SelectionMode::NonConsistent {
        for &id in nodes {
            let mut node = id;
            while let Some(p) = tree.parent(node) {
                if nodes.contains(&p) {
                    return Err(TreeError::AncestorConflict {
                        ancestor: p,
                        descendant: id,
                    });
                }
                node = p;
            }
        }
    }
    let selection = Selection {
        nodes: nodes.clone(),
        mode,
    };
    if matches!(mode, SelectionMode::GlobalLine | SelectionMode::StepLine) && !selection.tiles(tree)
    {
        return Err(TreeError::SelectionNotTiling);
    }
    Ok(selection)
}
