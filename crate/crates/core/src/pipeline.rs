//! End-to-end run from raw samples to a tree.

use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dataset::Dataset;
use crate::msc::{
    build_neighborhood_graph, compute_cancellation_sequence, compute_flow, extract_base_partitions,
    BasePartition, CancellationSequence, FlowAssignment, MscError, NeighborhoodGraph,
};
use crate::tree::{build_regulus_tree, RegulusTree, TreeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Msc(#[from] MscError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    /// Neighbors per point in the graph.
    pub k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { k: 15 }
    }
}

/// Every intermediate product of one run.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// The standardized dataset all later stages read.
    pub data: Arc<Dataset>,
    pub graph: NeighborhoodGraph,
    pub flow: FlowAssignment,
    pub base: Vec<BasePartition>,
    pub sequence: CancellationSequence,
    pub tree: Arc<RegulusTree>,
}

impl Analysis {
    /// Standardize `data`, then build the graph, flow, base partitions,
    /// cancellation sequence and tree.
    pub fn run(data: &Dataset, config: PipelineConfig) -> Result<Self, PipelineError> {
        let data = data.standardize();
        let graph = build_neighborhood_graph(&data, config.k)?;
        let flow = compute_flow(&data, &graph);
        let base = extract_base_partitions(&flow);
        let sequence = compute_cancellation_sequence(&data, &graph, &flow, &base);
        let tree = build_regulus_tree(&base, &sequence)?;
        Ok(Self {
            data: Arc::new(data),
            graph,
            flow,
            base,
            sequence,
            tree: Arc::new(tree),
        })
    }
}
