//! Lazily computed, cached per-node measures.
//!
//! A measure is registered under a name with a scope, a list of measures it
//! may query, and a compute function. Values are computed on first request
//! and cached. Stores of derived trees chain to the store of their source
//! tree: a value cached there is reused as long as the measure and all of
//! its dependencies are still the same registered definitions.

mod builtin;
mod value;

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::hash::Hasher;
use core::sync::atomic::{AtomicU64, Ordering};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use spin::{Mutex, RwLock};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::regression::RegressionError;
use crate::tree::{NodeId, RegulusTree, TreeError};

pub use builtin::register_structural_measures;
pub use value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("unknown measure {0:?}")]
    UnknownMeasure(String),
    #[error("measure {0:?} would depend on itself")]
    Cycle(String),
    #[error("measure {measure:?} queried {dependency:?}, which it does not declare")]
    UndeclaredDependency { measure: String, dependency: String },
    #[error("measure {measure:?} has {actual} scope, queried as {requested}")]
    WrongScope {
        measure: String,
        actual: Scope,
        requested: Scope,
    },
    #[error("measure {measure:?} expected a {expected} value, got {actual}")]
    TypeMismatch {
        measure: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("no reference model set")]
    NoReference,
    #[error("store tree does not share partitions with the chained store")]
    ChainMismatch,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

/// What a measure is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// A single node.
    Node,
    /// A node and its parent in the queried tree. Values are keyed by the
    /// pair, so a node that keeps its parent in a derived tree reuses them.
    Parent,
    /// An arbitrary ordered pair of nodes.
    Pair,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Node => "node",
            Scope::Parent => "parent",
            Scope::Pair => "pair",
        })
    }
}

/// Cache key. Parent-scoped values are keyed by `Pair(node, parent)`, or
/// `Node(root)` for the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Key {
    Node(NodeId),
    Pair(NodeId, NodeId),
}

/// Arguments handed to a compute function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub node: NodeId,
    /// The parent for parent-scoped measures, the second node for pair
    /// measures, `None` otherwise.
    pub other: Option<NodeId>,
}

pub type ComputeFn = dyn Fn(&Context<'_>, Query) -> Result<Value, MeasureError> + Send + Sync;

pub struct MeasureDef {
    name: String,
    scope: Scope,
    depends_on: Vec<String>,
    param: u64,
    compute: Arc<ComputeFn>,
}

impl MeasureDef {
    pub fn new<F>(name: &str, scope: Scope, compute: F) -> Self
    where
        F: Fn(&Context<'_>, Query) -> Result<Value, MeasureError> + Send + Sync + 'static,
    {
        Self {
            name: name.to_owned(),
            scope,
            depends_on: Vec::new(),
            param: 0,
            compute: Arc::new(compute),
        }
    }

    pub fn depends_on(mut self, names: &[&str]) -> Self {
        self.depends_on = names.iter().map(|&n| n.to_owned()).collect();
        self
    }

    /// Tag cached values with a parameter fingerprint, see [`param_hash`].
    pub fn with_param(mut self, param: u64) -> Self {
        self.param = param;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn dependencies(&self) -> &[String] {
        &self.depends_on
    }

    pub fn param(&self) -> u64 {
        self.param
    }
}

impl fmt::Debug for MeasureDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureDef")
            .field("name", &self.name)
            .field("scope", &self.scope)
            .field("depends_on", &self.depends_on)
            .field("param", &self.param)
            .finish_non_exhaustive()
    }
}

/// FNV-1a fingerprint of a list of parameter words.
pub fn param_hash(words: &[u64]) -> u64 {
    let mut h = FnvHasher::default();
    for w in words {
        h.write_u64(*w);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CacheKey {
    measure: String,
    key: Key,
    param: u64,
}

/// One cached value, as written to and read from cache files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub measure: String,
    pub key: Key,
    pub param: u64,
    pub value: Value,
}

/// Handle passed to compute functions for reading the tree, the data and
/// declared dependencies.
pub struct Context<'a> {
    store: &'a AttributeStore,
    current: &'a MeasureDef,
}

impl Context<'_> {
    pub fn tree(&self) -> &RegulusTree {
        &self.store.tree
    }

    pub fn data(&self) -> &Dataset {
        &self.store.data
    }

    fn allow(&self, name: &str) -> Result<(), MeasureError> {
        if self.current.depends_on.iter().any(|d| d == name) {
            Ok(())
        } else {
            Err(MeasureError::UndeclaredDependency {
                measure: self.current.name.clone(),
                dependency: name.to_owned(),
            })
        }
    }

    pub fn get(&self, name: &str, node: NodeId) -> Result<Value, MeasureError> {
        self.allow(name)?;
        self.store.get(name, node)
    }

    pub fn get_pair(&self, name: &str, a: NodeId, b: NodeId) -> Result<Value, MeasureError> {
        self.allow(name)?;
        self.store.get_pair(name, a, b)
    }

    /// Inputs and active output of the points in `node`'s range.
    pub fn gather(&self, node: NodeId) -> (Vec<f64>, Vec<f64>) {
        self.store.data.gather(self.store.tree.points(node))
    }

    pub fn dims(&self) -> usize {
        self.store.data.dims()
    }
}

/// Measure definitions and cached values for one tree.
///
/// All methods take `&self`. Lookups and computation may run concurrently;
/// registration and restoring should not overlap with lookups of the
/// affected measures.
pub struct AttributeStore {
    tree: Arc<RegulusTree>,
    data: Arc<Dataset>,
    defs: RwLock<BTreeMap<String, Arc<MeasureDef>>>,
    cache: RwLock<BTreeMap<CacheKey, Value>>,
    chain: Option<Arc<AttributeStore>>,
    computes: AtomicU64,
    computes_by: Mutex<BTreeMap<String, u64>>,
}

impl fmt::Debug for AttributeStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AttributeStore")
            .field("measures", &self.measure_names())
            .field("cached", &self.cache_len())
            .field("chained", &self.chain.is_some())
            .finish_non_exhaustive()
    }
}

impl AttributeStore {
    pub fn new(tree: Arc<RegulusTree>, data: Arc<Dataset>) -> Self {
        Self {
            tree,
            data,
            defs: RwLock::new(BTreeMap::new()),
            cache: RwLock::new(BTreeMap::new()),
            chain: None,
            computes: AtomicU64::new(0),
            computes_by: Mutex::new(BTreeMap::new()),
        }
    }

    /// A store for a tree derived from `chain`'s tree. It starts with the
    /// same definitions and reuses `chain`'s cached values where valid.
    pub fn derived(
        tree: Arc<RegulusTree>,
        chain: Arc<AttributeStore>,
    ) -> Result<Self, MeasureError> {
        if !Arc::ptr_eq(tree.shared(), chain.tree.shared()) {
            return Err(MeasureError::ChainMismatch);
        }
        let defs = chain.defs.read().clone();
        Ok(Self {
            tree,
            data: chain.data.clone(),
            defs: RwLock::new(defs),
            cache: RwLock::new(BTreeMap::new()),
            chain: Some(chain),
            computes: AtomicU64::new(0),
            computes_by: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn tree(&self) -> &Arc<RegulusTree> {
        &self.tree
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn chain(&self) -> Option<&Arc<AttributeStore>> {
        self.chain.as_ref()
    }

    /// Register or replace a measure. Replacing drops cached values of the
    /// measure and of everything depending on it.
    pub fn register(&self, def: MeasureDef) -> Result<(), MeasureError> {
        let mut defs = self.defs.write();
        for dep in &def.depends_on {
            if *dep == def.name {
                return Err(MeasureError::Cycle(def.name.clone()));
            }
            if !defs.contains_key(dep) {
                return Err(MeasureError::UnknownMeasure(dep.clone()));
            }
        }
        // Would any dependency reach back to this name?
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = def.depends_on.iter().map(String::as_str).collect();
        while let Some(n) = stack.pop() {
            if n == def.name {
                return Err(MeasureError::Cycle(def.name.clone()));
            }
            if seen.insert(n) {
                if let Some(d) = defs.get(n) {
                    stack.extend(d.depends_on.iter().map(String::as_str));
                }
            }
        }
        let name = def.name.clone();
        defs.insert(name.clone(), Arc::new(def));
        let stale = dependents(&defs, &name);
        drop(defs);
        self.cache
            .write()
            .retain(|k, _| !stale.contains(&k.measure));
        Ok(())
    }

    /// Drop cached values of `name` and its dependents. Returns how many
    /// values were dropped.
    pub fn invalidate(&self, name: &str) -> Result<usize, MeasureError> {
        let defs = self.defs.read();
        if !defs.contains_key(name) {
            return Err(MeasureError::UnknownMeasure(name.to_owned()));
        }
        let stale = dependents(&defs, name);
        drop(defs);
        let mut cache = self.cache.write();
        let before = cache.len();
        cache.retain(|k, _| !stale.contains(&k.measure));
        Ok(before - cache.len())
    }

    pub fn is_registered(&self, name: &str) -> bool {
        self.defs.read().contains_key(name)
    }

    pub fn measure_names(&self) -> Vec<String> {
        self.defs.read().keys().cloned().collect()
    }

    pub fn def(&self, name: &str) -> Option<Arc<MeasureDef>> {
        self.defs.read().get(name).cloned()
    }

    fn require(&self, name: &str) -> Result<Arc<MeasureDef>, MeasureError> {
        self.def(name)
            .ok_or_else(|| MeasureError::UnknownMeasure(name.to_owned()))
    }

    /// Value of a node- or parent-scoped measure.
    pub fn get(&self, name: &str, node: NodeId) -> Result<Value, MeasureError> {
        let def = self.require(name)?;
        self.tree.check(node)?;
        let (key, query) = match def.scope {
            Scope::Node => (Key::Node(node), Query { node, other: None }),
            Scope::Parent => match self.tree.parent(node) {
                Some(p) => (
                    Key::Pair(node, p),
                    Query {
                        node,
                        other: Some(p),
                    },
                ),
                None => (Key::Node(node), Query { node, other: None }),
            },
            Scope::Pair => {
                return Err(MeasureError::WrongScope {
                    measure: name.to_owned(),
                    actual: Scope::Pair,
                    requested: Scope::Node,
                })
            }
        };
        self.lookup(&def, key, query)
    }

    /// Value of a pair-scoped measure.
    pub fn get_pair(&self, name: &str, a: NodeId, b: NodeId) -> Result<Value, MeasureError> {
        let def = self.require(name)?;
        self.tree.check(a)?;
        self.tree.check(b)?;
        if def.scope != Scope::Pair {
            return Err(MeasureError::WrongScope {
                measure: name.to_owned(),
                actual: def.scope,
                requested: Scope::Pair,
            });
        }
        self.lookup(
            &def,
            Key::Pair(a, b),
            Query {
                node: a,
                other: Some(b),
            },
        )
    }

    /// A scalar measure, `None` when undefined.
    pub fn scalar(&self, name: &str, node: NodeId) -> Result<Option<f64>, MeasureError> {
        match self.get(name, node)? {
            Value::Scalar(v) => Ok(Some(v)),
            Value::Undefined => Ok(None),
            other => Err(MeasureError::TypeMismatch {
                measure: name.to_owned(),
                expected: "scalar",
                actual: other.type_name(),
            }),
        }
    }

    fn lookup(&self, def: &Arc<MeasureDef>, key: Key, query: Query) -> Result<Value, MeasureError> {
        let ck = CacheKey {
            measure: def.name.clone(),
            key,
            param: def.param,
        };
        if let Some(v) = self.cache.read().get(&ck) {
            return Ok(v.clone());
        }
        if let Some(chain) = &self.chain {
            if self.lineage_matches(chain, def) {
                if let Some(v) = chain.cached_value(&ck) {
                    self.cache.write().insert(ck, v.clone());
                    return Ok(v);
                }
            }
        }
        let ctx = Context {
            store: self,
            current: def,
        };
        let value = (def.compute)(&ctx, query)?;
        self.computes.fetch_add(1, Ordering::Relaxed);
        *self.computes_by.lock().entry(def.name.clone()).or_insert(0) += 1;
        Ok(self.cache.write().entry(ck).or_insert(value).clone())
    }

    /// A value cached here or, where definitions agree, along the chain.
    fn cached_value(&self, ck: &CacheKey) -> Option<Value> {
        if let Some(v) = self.cache.read().get(ck) {
            return Some(v.clone());
        }
        let chain = self.chain.as_ref()?;
        let def = self.def(&ck.measure)?;
        if self.lineage_matches(chain, &def) {
            chain.cached_value(ck)
        } else {
            None
        }
    }

    /// True when `def` and everything it depends on are the very same
    /// definitions in `other`.
    fn lineage_matches(&self, other: &AttributeStore, def: &Arc<MeasureDef>) -> bool {
        let mine = self.defs.read();
        let theirs = other.defs.read();
        let mut stack = alloc::vec![def.name.as_str()];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            match (mine.get(n), theirs.get(n)) {
                (Some(a), Some(b)) if Arc::ptr_eq(a, b) => {
                    stack.extend(a.depends_on.iter().map(String::as_str));
                }
                _ => return false,
            }
        }
        true
    }

    /// The value cached in this store, without computing or chaining.
    pub fn cached(&self, name: &str, key: Key) -> Option<Value> {
        let def = self.def(name)?;
        let ck = CacheKey {
            measure: name.to_owned(),
            key,
            param: def.param,
        };
        self.cache.read().get(&ck).cloned()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().len()
    }

    /// Number of compute-function invocations in this store.
    pub fn compute_count(&self) -> u64 {
        self.computes.load(Ordering::Relaxed)
    }

    pub fn compute_count_of(&self, name: &str) -> u64 {
        self.computes_by.lock().get(name).copied().unwrap_or(0)
    }

    /// Every cached value, ordered by measure name then key.
    pub fn snapshot(&self) -> Vec<CacheEntry> {
        self.cache
            .read()
            .iter()
            .map(|(k, v)| CacheEntry {
                measure: k.measure.clone(),
                key: k.key,
                param: k.param,
                value: v.clone(),
            })
            .collect()
    }

    /// Load cached values. Every entry must name a registered measure and
    /// valid nodes; entries whose parameter fingerprint differs from the
    /// current definition are skipped. Returns the number loaded.
    pub fn restore(&self, entries: Vec<CacheEntry>) -> Result<usize, MeasureError> {
        let defs = self.defs.read();
        let mut staged = Vec::with_capacity(entries.len());
        for e in entries {
            let def = defs
                .get(&e.measure)
                .ok_or_else(|| MeasureError::UnknownMeasure(e.measure.clone()))?;
            match e.key {
                Key::Node(a) => self.tree.check(a)?,
                Key::Pair(a, b) => {
                    self.tree.check(a)?;
                    self.tree.check(b)?;
                }
            }
            if e.param != def.param {
                continue;
            }
            staged.push((
                CacheKey {
                    measure: e.measure,
                    key: e.key,
                    param: e.param,
                },
                e.value,
            ));
        }
        drop(defs);
        let n = staged.len();
        self.cache.write().extend(staged);
        Ok(n)
    }
}

/// `name` and every measure transitively depending on it.
fn dependents(defs: &BTreeMap<String, Arc<MeasureDef>>, name: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(name.to_owned());
    loop {
        let before = out.len();
        for d in defs.values() {
            if !out.contains(&d.name) && d.depends_on.iter().any(|x| out.contains(x)) {
                out.insert(d.name.clone());
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

#[cfg(test)]
mod tests;
