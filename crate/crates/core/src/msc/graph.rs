use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MscError;
use crate::dataset::Dataset;

/// Symmetrized k-nearest-neighbor graph in standardized input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodGraph {
    k: usize,
    /// Sorted neighbor lists; undirected, no self-loops.
    adjacency: Vec<Vec<u32>>,
    /// Edges added to join disconnected k-NN components.
    bridges: Vec<(u32, u32)>,
}

impl NeighborhoodGraph {
    /// Build from explicit undirected adjacency. Lists are symmetrized,
    /// sorted, and stripped of self-loops and duplicates.
    pub fn from_adjacency(k: usize, lists: Vec<Vec<u32>>) -> Self {
        let mut adjacency = vec![Vec::new(); lists.len()];
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                if j as usize != i {
                    adjacency[i].push(j);
                    adjacency[j as usize].push(i as u32);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            k,
            adjacency,
            bridges: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, p: usize) -> &[u32] {
        &self.adjacency[p]
    }

    pub fn bridges(&self) -> &[(u32, u32)] {
        &self.bridges
    }

    /// Each undirected edge once, as `(p, q)` with `p < q`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(p, list)| {
            list.iter()
                .copied()
                .filter(move |&q| q as usize > p)
                .map(move |q| (p as u32, q))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn components(&self) -> Vec<u32> {
        let n = self.len();
        let mut comp = vec![u32::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if comp[s] != u32::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(p) = stack.pop() {
                for &q in &self.adjacency[p] {
                    if comp[q as usize] == u32::MAX {
                        comp[q as usize] = next;
                        stack.push(q as usize);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    fn add_edge(&mut self, p: u32, q: u32) {
        for (a, b) in [(p, q), (q, p)] {
            let list = &mut self.adjacency[a as usize];
            if let Err(pos) = list.binary_search(&b) {
                list.insert(pos, b);
            }
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetrized k-NN graph over the dataset's inputs. Ties in distance are
/// broken by point index. If the k-NN graph is disconnected, components are
/// joined by their closest cross pairs so a single partition remains after
/// full simplification.
pub fn build_neighborhood_graph(ds: &Dataset, k: usize) -> Result<NeighborhoodGraph, MscError> {
    let n = ds.len();
    if k == 0 || k >= n {
        return Err(MscError::InvalidNeighborCount { k, n });
    }
    let mut lists = Vec::with_capacity(n);
    let mut scratch: Vec<(f64, u32)> = Vec::with_capacity(n);
    for i in 0..n {
        scratch.clear();
        let pi = ds.point(i);
        scratch.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(pi, ds.point(j)), j as u32)),
        );
        let cmp = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, cmp);
            scratch.truncate(k);
        }
        lists.push(scratch.iter().map(|&(_, j)| j).collect());
    }
    let mut graph = NeighborhoodGraph::from_adjacency(k, lists);
    connect_components(&mut graph, ds);
    Ok(graph)
}

/// Prim-style growth from the component of point 0: repeatedly attach the
/// closest outside point (and its whole component) to the grown set.
fn connect_components(graph: &mut NeighborhoodGraph, ds: &Dataset) {
    let comp = graph.components();
    let count = comp.iter().copied().max().map_or(0, |c| c + 1);
    if count <= 1 {
        return;
    }
    let n = graph.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count as usize];
    for (p, &c) in comp.iter().enumerate() {
        members[c as usize].push(p);
    }
    let mut grown = vec![false; count as usize];
    let mut best = vec![(f64::INFINITY, u32::MAX); n];
    let absorb = |c: usize, grown: &mut Vec<bool>, best: &mut Vec<(f64, u32)>| {
        grown[c] = true;
        for &p in &members[c] {
            for q in 0..n {
                if grown[comp[q] as usize] {
                    continue;
                }
                let d = squared_distance(ds.point(p), ds.point(q));
                let cand = (d, p as u32);
                if cand.0 < best[q].0 || (cand.0 == best[q].0 && cand.1 < best[q].1) {
                    best[q] = cand;
                }
            }
        }
    };
    absorb(comp[0] as usize, &mut grown, &mut best);
    for _ in 1..count {
        let (q, &(_, p)) = best
            .iter()
            .enumerate()
            .filter(|(q, _)| !grown[comp[*q] as usize])
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
            .expect("an ungrown component remains");
        graph.add_edge(p, q as u32);
        graph.bridges.push((p.min(q as u32), p.max(q as u32)));
        absorb(comp[q] as usize, &mut grown, &mut best);
    }
}
