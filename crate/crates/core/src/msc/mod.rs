//! Approximate Morse-Smale decomposition of a sampled scalar function.
//!
//! Points are connected by a symmetrized k-nearest-neighbor graph. Each point
//! follows the steepest ascending and descending graph edges to a maximum
//! and a minimum; points sharing both endpoints form a base partition.
//! Extrema are then cancelled pairwise in order of persistence, which the
//! partition view sees as merges of the cells attached to the dying
//! extremum with the matching cells of the survivor.

mod cancel;
mod flow;
mod graph;
mod partition;

use thiserror::Error;

pub use cancel::{
    compute_cancellation_sequence, CancellationSequence, CancellationStep, ExtremumKind, Merge,
    Relabel,
};
pub use flow::{compute_flow, FlowAssignment};
pub use graph::{build_neighborhood_graph, NeighborhoodGraph};
pub use partition::{extract_base_partitions, BasePartition, CellKey};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MscError {
    #[error("neighbor count k={k} must be in 1..{n}")]
    InvalidNeighborCount { k: usize, n: usize },
}
