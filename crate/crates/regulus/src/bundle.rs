//! An analysis: the dataset, its original tree, derived trees with their
//! measure stores, and saved projections. Saved as versioned JSON (see
//! `docs/analysis-file.md`).

use std::collections::BTreeMap;
use std::sync::Arc;

use regulus_core::measures::{register_structural_measures, CacheEntry};
use regulus_core::regression::{register_regression_measures, set_reference, RegressionConfig};
use regulus_core::tree::{PartitionSet, ReduceFilter};
use regulus_core::{
    Analysis, AttributeStore, Dataset, DatasetError, FitKind, MeasureError, NodeId, PipelineConfig,
    PipelineError, ProjectionSpec, RegulusTree, TreeError, Value,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const FORMAT: &str = "regulus-analysis";
pub const VERSION: u32 = 1;
pub const ORIGINAL: &str = "orig";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("not an analysis file (format {0:?})")]
    Format(String),
    #[error("unsupported analysis file version {found}, expected {VERSION}")]
    Version { found: u32 },
    #[error("dataset hash mismatch: file says {stored}, content hashes to {actual}")]
    Integrity { stored: String, actual: String },
    #[error("unknown tree handle {0:?}")]
    UnknownHandle(String),
    #[error("tree {handle:?} refers to unknown source {source_handle:?}")]
    UnknownSource {
        handle: String,
        source_handle: String,
    },
    #[error("duplicate tree handle {0:?}")]
    DuplicateHandle(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Parameters fixed when an analysis is created.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisConfig {
    pub k: usize,
    pub fit: FitKind,
    pub bandwidth: f64,
    pub curve_samples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let r = RegressionConfig::default();
        Self {
            k: PipelineConfig::default().k,
            fit: r.fit,
            bandwidth: r.bandwidth,
            curve_samples: r.curve_samples,
        }
    }
}

impl AnalysisConfig {
    pub fn regression(&self) -> RegressionConfig {
        RegressionConfig {
            fit: self.fit,
            bandwidth: self.bandwidth,
            curve_samples: self.curve_samples,
        }
    }
}

/// One registered tree.
#[derive(Debug)]
pub struct TreeEntry {
    pub tree: Arc<RegulusTree>,
    pub store: Arc<AttributeStore>,
    pub source: Option<String>,
    pub filter: Option<ReduceFilter>,
}

#[derive(Debug)]
pub struct AnalysisBundle {
    /// The dataset as loaded, in original units.
    pub raw: Arc<Dataset>,
    /// The standardized dataset the trees and models are built on.
    pub data: Arc<Dataset>,
    pub config: AnalysisConfig,
    trees: BTreeMap<String, TreeEntry>,
    order: Vec<String>,
    pub presets: BTreeMap<String, ProjectionSpec>,
    reference: Option<NodeId>,
}

impl AnalysisBundle {
    /// Run the pipeline on a raw dataset.
    pub fn analyze(raw: Dataset, config: AnalysisConfig) -> Result<Self, BundleError> {
        let analysis = Analysis::run(&raw, PipelineConfig { k: config.k })?;
        let mut bundle = Self {
            raw: Arc::new(raw),
            data: analysis.data.clone(),
            config,
            trees: BTreeMap::new(),
            order: Vec::new(),
            presets: BTreeMap::new(),
            reference: None,
        };
        bundle
            .presets
            .insert("star".into(), ProjectionSpec::star(bundle.data.dims()));
        let store = bundle.new_store(analysis.tree.clone(), None)?;
        bundle.insert(
            ORIGINAL.into(),
            TreeEntry {
                tree: analysis.tree,
                store,
                source: None,
                filter: None,
            },
        )?;
        Ok(bundle)
    }

    fn new_store(
        &self,
        tree: Arc<RegulusTree>,
        chain: Option<&Arc<AttributeStore>>,
    ) -> Result<Arc<AttributeStore>, BundleError> {
        let store = match chain {
            Some(c) => AttributeStore::derived(tree, c.clone())?,
            None => {
                let s = AttributeStore::new(tree, self.data.clone());
                register_structural_measures(&s)?;
                register_regression_measures(&s, self.config.regression())?;
                s
            }
        };
        Ok(Arc::new(store))
    }

    fn insert(&mut self, handle: String, entry: TreeEntry) -> Result<(), BundleError> {
        if self.trees.contains_key(&handle) {
            return Err(BundleError::DuplicateHandle(handle));
        }
        self.order.push(handle.clone());
        self.trees.insert(handle, entry);
        Ok(())
    }

    pub fn original(&self) -> &TreeEntry {
        &self.trees[ORIGINAL]
    }

    pub fn entry(&self, handle: &str) -> Result<&TreeEntry, BundleError> {
        self.trees
            .get(handle)
            .ok_or_else(|| BundleError::UnknownHandle(handle.into()))
    }

    /// Handles in creation order.
    pub fn handles(&self) -> &[String] {
        &self.order
    }

    pub fn reference(&self) -> Option<NodeId> {
        self.reference
    }

    /// Derive a tree from `source` and register it under the next free
    /// handle `d1`, `d2`, ...
    pub fn reduce(&mut self, source: &str, filter: ReduceFilter) -> Result<String, BundleError> {
        let src = self.entry(source)?;
        let tree = Arc::new(filter.apply(&src.tree, &self.data)?);
        let store = self.new_store(tree.clone(), Some(&src.store))?;
        let handle = (1..)
            .map(|i| format!("d{i}"))
            .find(|h| !self.trees.contains_key(h))
            .unwrap();
        self.insert(
            handle.clone(),
            TreeEntry {
                tree,
                store,
                source: Some(source.into()),
                filter: Some(filter),
            },
        )?;
        Ok(handle)
    }

    fn reference_model(&self, node: NodeId) -> Result<regulus_core::LinearModel, BundleError> {
        match self.original().store.get("model", node)? {
            Value::Model(m) => Ok(m),
            other => Err(MeasureError::TypeMismatch {
                measure: "model".into(),
                expected: "model",
                actual: other.type_name(),
            }
            .into()),
        }
    }

    /// Use the model of `node` in the original tree as the reference for
    /// `reference_fitness` in every tree, or clear it.
    pub fn set_reference(&mut self, node: Option<NodeId>) -> Result<(), BundleError> {
        let model = node.map(|n| self.reference_model(n)).transpose()?;
        for e in self.trees.values() {
            set_reference(&e.store, model.clone())?;
        }
        self.reference = node;
        Ok(())
    }

    /// Evaluate `measures` on every node of `handle`.
    pub fn evaluate(&self, handle: &str, measures: &[String]) -> Result<(), BundleError> {
        let e = self.entry(handle)?;
        for m in measures {
            for id in e.tree.nodes() {
                e.store.get(m, id)?;
            }
        }
        Ok(())
    }

    /// Total measure computations across all stores.
    pub fn compute_count(&self) -> u64 {
        self.trees.values().map(|e| e.store.compute_count()).sum()
    }

    pub fn to_file(&self) -> AnalysisFile {
        let dataset = EmbeddedDataset::from_dataset(&self.raw);
        AnalysisFile {
            format: FORMAT.into(),
            version: VERSION,
            dataset: DatasetSection {
                sha256: dataset.sha256(),
                data: dataset,
            },
            config: self.config,
            partitions: self.original().tree.shared().as_ref().clone(),
            trees: self
                .order
                .iter()
                .map(|h| {
                    let e = &self.trees[h];
                    TreeSection {
                        handle: h.clone(),
                        source: e.source.clone(),
                        filter: e.filter.clone(),
                        nodes: e.tree.wiring(),
                        cache: e.store.snapshot(),
                    }
                })
                .collect(),
            presets: self.presets.clone(),
            reference: self.reference,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, BundleError> {
        let mut out = serde_json::to_vec_pretty(&self.to_file())?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        let probe: FileHeader = serde_json::from_slice(bytes)?;
        if probe.format != FORMAT {
            return Err(BundleError::Format(probe.format));
        }
        if probe.version != VERSION {
            return Err(BundleError::Version {
                found: probe.version,
            });
        }
        Self::from_file(serde_json::from_slice(bytes)?)
    }

    pub fn from_file(file: AnalysisFile) -> Result<Self, BundleError> {
        let actual = file.dataset.data.sha256();
        if actual != file.dataset.sha256 {
            return Err(BundleError::Integrity {
                stored: file.dataset.sha256,
                actual,
            });
        }
        let raw = file.dataset.data.into_dataset()?;
        let data = Arc::new(raw.standardize());
        let shared = Arc::new(file.partitions);
        let mut bundle = Self {
            raw: Arc::new(raw),
            data,
            config: file.config,
            trees: BTreeMap::new(),
            order: Vec::new(),
            presets: file.presets,
            reference: None,
        };
        let mut caches = Vec::new();
        for t in file.trees {
            let (source_tree, chain) = match &t.source {
                None => (None, None),
                Some(s) => {
                    let e = bundle
                        .trees
                        .get(s)
                        .ok_or_else(|| BundleError::UnknownSource {
                            handle: t.handle.clone(),
                            source_handle: s.clone(),
                        })?;
                    (Some(e.tree.clone()), Some(e.store.clone()))
                }
            };
            let tree = Arc::new(RegulusTree::from_parents(
                shared.clone(),
                &t.nodes,
                source_tree,
            )?);
            let store = bundle.new_store(tree.clone(), chain.as_ref())?;
            caches.push((store.clone(), t.cache));
            bundle.insert(
                t.handle,
                TreeEntry {
                    tree,
                    store,
                    source: t.source,
                    filter: t.filter,
                },
            )?;
        }
        if !bundle.trees.contains_key(ORIGINAL) {
            return Err(BundleError::UnknownHandle(ORIGINAL.into()));
        }
        // Restore before setting the reference so the reference model comes
        // from the cache.
        for (store, cache) in &caches {
            store.restore(
                cache
                    .iter()
                    .filter(|e| e.measure != "reference_fitness")
                    .cloned()
                    .collect(),
            )?;
        }
        if file.reference.is_some() {
            bundle.set_reference(file.reference)?;
            for (store, cache) in caches {
                store.restore(
                    cache
                        .into_iter()
                        .filter(|e| e.measure == "reference_fitness")
                        .collect(),
                )?;
            }
        }
        Ok(bundle)
    }
}

#[derive(Deserialize)]
struct FileHeader {
    format: String,
    version: u32,
}

/// The on-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisFile {
    pub format: String,
    pub version: u32,
    pub dataset: DatasetSection,
    pub config: AnalysisConfig,
    pub partitions: PartitionSet,
    pub trees: Vec<TreeSection>,
    pub presets: BTreeMap<String, ProjectionSpec>,
    pub reference: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSection {
    pub sha256: String,
    pub data: EmbeddedDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeSection {
    pub handle: String,
    pub source: Option<String>,
    pub filter: Option<ReduceFilter>,
    /// `(node, parent)` pairs.
    pub nodes: Vec<(NodeId, Option<NodeId>)>,
    pub cache: Vec<CacheEntry>,
}

/// The raw dataset, column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmbeddedDataset {
    pub dim_names: Vec<String>,
    pub output_names: Vec<String>,
    pub active_output: String,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl EmbeddedDataset {
    pub fn from_dataset(d: &Dataset) -> Self {
        Self {
            dim_names: d.dim_names().to_vec(),
            output_names: d.output_names().to_vec(),
            active_output: d.output_names()[d.active_output()].clone(),
            inputs: (0..d.dims())
                .map(|j| (0..d.len()).map(|i| d.input(i, j)).collect())
                .collect(),
            outputs: (0..d.output_count())
                .map(|j| d.output(j).to_vec())
                .collect(),
        }
    }

    pub fn into_dataset(self) -> Result<Dataset, DatasetError> {
        let n = self.outputs.first().map_or(0, Vec::len);
        let d = self.inputs.len();
        let mut rows = Vec::with_capacity(n * d);
        for i in 0..n {
            for col in &self.inputs {
                rows.push(col.get(i).copied().unwrap_or(f64::NAN));
            }
        }
        Dataset::new(
            rows,
            self.dim_names,
            self.outputs,
            self.output_names,
            &self.active_output,
        )
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("dataset serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
