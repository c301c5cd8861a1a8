use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::flow::FlowAssignment;

/// `(minimum, maximum)` point indices identifying a Morse-Smale cell.
pub type CellKey = (u32, u32);

/// Points whose flow starts at the same minimum and ends at the same
/// maximum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasePartition {
    pub key: CellKey,
    /// Sorted point indices.
    pub points: Vec<u32>,
}

impl BasePartition {
    pub fn min_ext(&self) -> u32 {
        self.key.0
    }

    pub fn max_ext(&self) -> u32 {
        self.key.1
    }
}

/// One partition per occupied `(min, max)` key, ordered by key. The
/// partitions are disjoint and cover every point.
pub fn extract_base_partitions(flow: &FlowAssignment) -> Vec<BasePartition> {
    let mut cells: BTreeMap<CellKey, Vec<u32>> = BTreeMap::new();
    for (p, (&lo, &hi)) in flow.min_of.iter().zip(&flow.max_of).enumerate() {
        cells.entry((lo, hi)).or_default().push(p as u32);
    }
    cells
        .into_iter()
        .map(|(key, points)| BasePartition { key, points })
        .collect()
}
