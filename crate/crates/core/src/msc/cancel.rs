use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use serde::{Deserialize, Serialize};

use super::flow::FlowAssignment;
use super::graph::NeighborhoodGraph;
use super::partition::{BasePartition, CellKey};
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// Two partitions joined into a new one.
///
/// Partition ids here are sequence ids: base partitions are `0..base_count`
/// in [`extract_base_partitions`](super::extract_base_partitions) order, and
/// every merge allocates the next id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub first: u32,
    pub second: u32,
    pub merged: u32,
    pub key: CellKey,
}

/// A partition whose key changes because one of its extrema died, without
/// merging with anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabel {
    pub partition: u32,
    pub key: CellKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationStep {
    /// Normalized to `[0, 1]` by the active output's range.
    pub persistence: f64,
    pub kind: ExtremumKind,
    pub dying: u32,
    pub surviving: u32,
    /// Function value at the merge saddle (standardized units).
    pub saddle: f64,
    pub merges: Vec<Merge>,
    pub relabels: Vec<Relabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationSequence {
    pub base_count: u32,
    pub initial_maxima: u32,
    pub initial_minima: u32,
    /// Active output range used to normalize persistence.
    pub value_range: f64,
    pub steps: Vec<CancellationStep>,
}

impl CancellationSequence {
    /// Extrema still alive at normalized persistence `threshold`.
    pub fn extrema_alive(&self, threshold: f64) -> usize {
        let cancelled = self
            .steps
            .iter()
            .take_while(|s| s.persistence <= threshold)
            .count();
        (self.initial_maxima + self.initial_minima) as usize - cancelled
    }

    /// Step curve of surviving extrema count against persistence: one
    /// `(persistence, alive_after)` entry per distinct persistence value,
    /// preceded by `(0.0, initial)`.
    pub fn persistence_graph(&self) -> Vec<(f64, usize)> {
        let mut alive = (self.initial_maxima + self.initial_minima) as usize;
        let mut out = alloc::vec![(0.0, alive)];
        for step in &self.steps {
            alive -= 1;
            match out.last_mut() {
                Some(last) if last.0 == step.persistence => last.1 = alive,
                _ => out.push((step.persistence, alive)),
            }
        }
        out
    }

    pub fn partition_count(&self) -> u32 {
        self.base_count
            + self
                .steps
                .iter()
                .map(|s| s.merges.len() as u32)
                .sum::<u32>()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    persistence: f64,
    dying: u32,
    kind: ExtremumKind,
    surviving: u32,
    saddle: f64,
}

impl Candidate {
    fn order_key(&self) -> (f64, u32, ExtremumKind, u32) {
        (self.persistence, self.dying, self.kind, self.surviving)
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        let (pa, da, ka, sa) = self.order_key();
        let (pb, db, kb, sb) = other.order_key();
        pa.total_cmp(&pb)
            .then(da.cmp(&db))
            .then(ka.cmp(&kb))
            .then(sa.cmp(&sb))
            .then(self.saddle.total_cmp(&other.saddle))
    }
}

/// Region adjacency between alive extrema of one kind, with the current
/// saddle value of each adjacent pair.
struct ExtremumGraph {
    kind: ExtremumKind,
    adj: BTreeMap<u32, BTreeMap<u32, f64>>,
}

impl ExtremumGraph {
    fn new(kind: ExtremumKind, extrema: &[u32]) -> Self {
        Self {
            kind,
            adj: extrema.iter().map(|&e| (e, BTreeMap::new())).collect(),
        }
    }

    /// Saddles are the highest boundary crossing between two maxima
    /// regions, and the lowest between two minima regions.
    fn better(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            ExtremumKind::Maximum => a.max(b),
            ExtremumKind::Minimum => a.min(b),
        }
    }

    fn touch(&mut self, a: u32, b: u32, saddle: f64) {
        let merged = match self.adj[&a].get(&b) {
            Some(&s) => self.better(s, saddle),
            None => saddle,
        };
        self.adj.get_mut(&a).unwrap().insert(b, merged);
        self.adj.get_mut(&b).unwrap().insert(a, merged);
    }

    fn candidate(&self, f: &[f64], range: f64, a: u32, b: u32, saddle: f64) -> Candidate {
        let (fa, fb) = (f[a as usize], f[b as usize]);
        // The less extreme one dies; on equal values the larger index dies.
        let a_dies = match self.kind {
            ExtremumKind::Maximum => fa < fb || (fa == fb && a > b),
            ExtremumKind::Minimum => fa > fb || (fa == fb && a > b),
        };
        let (dying, surviving) = if a_dies { (a, b) } else { (b, a) };
        let span = match self.kind {
            ExtremumKind::Maximum => f[dying as usize] - saddle,
            ExtremumKind::Minimum => saddle - f[dying as usize],
        };
        let persistence = if range > 0.0 {
            (span / range).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Candidate {
            persistence,
            dying,
            kind: self.kind,
            surviving,
            saddle,
        }
    }

    fn is_current(&self, c: &Candidate) -> bool {
        self.adj
            .get(&c.dying)
            .and_then(|m| m.get(&c.surviving))
            .is_some_and(|&s| s == c.saddle)
    }

    /// Fold `dying`'s adjacency into `surviving`; returns the pairs whose
    /// saddle changed.
    fn absorb(&mut self, dying: u32, surviving: u32) -> Vec<(u32, f64)> {
        let neighbors = self.adj.remove(&dying).unwrap_or_default();
        let mut touched = Vec::new();
        for (c, s) in neighbors {
            let list = self.adj.get_mut(&c).unwrap();
            list.remove(&dying);
            if c == surviving {
                continue;
            }
            self.touch(surviving, c, s);
            touched.push((c, self.adj[&surviving][&c]));
        }
        touched
    }
}

/// Partition bookkeeping during replay: current key of each alive partition
/// and the partitions attached to each extremum.
struct Cells {
    key_of: Vec<CellKey>,
    by_key: BTreeMap<CellKey, u32>,
    by_max: BTreeMap<u32, BTreeSet<u32>>,
    by_min: BTreeMap<u32, BTreeSet<u32>>,
}

impl Cells {
    fn new(parts: &[BasePartition]) -> Self {
        let mut cells = Cells {
            key_of: Vec::with_capacity(parts.len() * 2),
            by_key: BTreeMap::new(),
            by_max: BTreeMap::new(),
            by_min: BTreeMap::new(),
        };
        for p in parts {
            cells.insert(p.key);
        }
        cells
    }

    fn insert(&mut self, key: CellKey) -> u32 {
        let id = self.key_of.len() as u32;
        self.key_of.push(key);
        self.attach(id, key);
        id
    }

    fn attach(&mut self, id: u32, key: CellKey) {
        self.key_of[id as usize] = key;
        self.by_key.insert(key, id);
        self.by_min.entry(key.0).or_default().insert(id);
        self.by_max.entry(key.1).or_default().insert(id);
    }

    fn detach(&mut self, id: u32) {
        let key = self.key_of[id as usize];
        self.by_key.remove(&key);
        if let Some(s) = self.by_min.get_mut(&key.0) {
            s.remove(&id);
        }
        if let Some(s) = self.by_max.get_mut(&key.1) {
            s.remove(&id);
        }
    }

    /// Re-key every partition attached to `dying` onto `surviving`, merging
    /// with the partition that already holds the target key.
    fn cancel(
        &mut self,
        kind: ExtremumKind,
        dying: u32,
        surviving: u32,
    ) -> (Vec<Merge>, Vec<Relabel>) {
        let moving = match kind {
            ExtremumKind::Maximum => self.by_max.remove(&dying),
            ExtremumKind::Minimum => self.by_min.remove(&dying),
        }
        .unwrap_or_default();
        let mut merges = Vec::new();
        let mut relabels = Vec::new();
        for id in moving {
            let old = self.key_of[id as usize];
            let key = match kind {
                ExtremumKind::Maximum => (old.0, surviving),
                ExtremumKind::Minimum => (surviving, old.1),
            };
            self.detach(id);
            match self.by_key.get(&key).copied() {
                Some(other) => {
                    self.detach(other);
                    let merged = self.insert(key);
                    merges.push(Merge {
                        first: id.min(other),
                        second: id.max(other),
                        merged,
                        key,
                    });
                }
                None => {
                    self.attach(id, key);
                    relabels.push(Relabel { partition: id, key });
                }
            }
        }
        (merges, relabels)
    }
}

/// Cancel adjacent same-kind extremum pairs in order of increasing
/// normalized persistence until a single partition remains.
///
/// The persistence of a maximum pair is `(f(dying) - saddle) / range`, with
/// the saddle being the highest `min(f(p), f(q))` over graph edges joining
/// the two ascending regions; minima are symmetric. Ties go to the smaller
/// dying extremum index. The global maximum and minimum always survive.
pub fn compute_cancellation_sequence(
    ds: &Dataset,
    g: &NeighborhoodGraph,
    flow: &FlowAssignment,
    parts: &[BasePartition],
) -> CancellationSequence {
    let f = ds.values();
    let range = ds.value_range();
    let mut maxima = ExtremumGraph::new(ExtremumKind::Maximum, &flow.maxima);
    let mut minima = ExtremumGraph::new(ExtremumKind::Minimum, &flow.minima);
    for (p, q) in g.edges() {
        let (fp, fq) = (f[p as usize], f[q as usize]);
        let (mp, mq) = (flow.max_of[p as usize], flow.max_of[q as usize]);
        if mp != mq {
            maxima.touch(mp, mq, fp.min(fq));
        }
        let (np, nq) = (flow.min_of[p as usize], flow.min_of[q as usize]);
        if np != nq {
            minima.touch(np, nq, fp.max(fq));
        }
    }

    let mut heap = BinaryHeap::new();
    for graph in [&maxima, &minima] {
        for (&a, list) in &graph.adj {
            for (&b, &s) in list.range(a + 1..) {
                heap.push(Reverse(graph.candidate(f, range, a, b, s)));
            }
        }
    }

    let mut cells = Cells::new(parts);
    let mut steps = Vec::new();
    while let Some(Reverse(c)) = heap.pop() {
        let graph = match c.kind {
            ExtremumKind::Maximum => &mut maxima,
            ExtremumKind::Minimum => &mut minima,
        };
        if !graph.is_current(&c) {
            continue;
        }
        for (other, s) in graph.absorb(c.dying, c.surviving) {
            heap.push(Reverse(graph.candidate(f, range, c.surviving, other, s)));
        }
        let (merges, relabels) = cells.cancel(c.kind, c.dying, c.surviving);
        steps.push(CancellationStep {
            persistence: c.persistence,
            kind: c.kind,
            dying: c.dying,
            surviving: c.surviving,
            saddle: c.saddle,
            merges,
            relabels,
        });
    }

    CancellationSequence {
        base_count: parts.len() as u32,
        initial_maxima: flow.maxima.len() as u32,
        initial_minima: flow.minima.len() as u32,
        value_range: range,
        steps,
    }
}
