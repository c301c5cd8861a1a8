//! Topological partition hierarchies for scalar functions sampled on
//! multi-dimensional point clouds.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`dataset`] standardizes the sample matrix once, up front.
//! 2. [`msc`] approximates the Morse-Smale complex on a k-nearest-neighbor
//!    graph and produces a persistence-ordered list of extremum
//!    cancellations, each expressed as partition merges.
//! 3. [`tree`] replays those merges into a Regulus Tree: a nested partition
//!    hierarchy in which every node owns a contiguous range of a single point
//!    permutation. The tree can be laid out, cut, and reduced into derived
//!    views that share the partition records.
//! 4. [`measures`] and [`regression`] attach lazily evaluated, cached
//!    attributes (fitness scores, per-dimension fitness, inverse regression
//!    curves) to tree nodes, chaining caches across derived trees.
//!
//! [`projection`] maps points and partition edges into a steerable 2D plane.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
mod linalg;
pub mod measures;
pub mod msc;
mod numeric;
pub mod pipeline;
pub mod projection;
pub mod regression;
pub mod tree;

pub use dataset::{Dataset, DatasetError};
pub use measures::{AttributeStore, MeasureError, Value};
pub use msc::{CancellationSequence, FlowAssignment, MscError, NeighborhoodGraph};
pub use pipeline::{Analysis, PipelineConfig, PipelineError};
pub use projection::ProjectionSpec;
pub use regression::{FitKind, LinearModel};
pub use tree::{NodeId, RegulusTree, Selection, SelectionMode, TreeError};
