use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{squared_distance, NeighborhoodGraph};
use crate::dataset::Dataset;
use crate::numeric::sqrt;

/// Where each point's steepest ascent and descent paths end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment {
    /// One steepest-ascent step per point; maxima point to themselves.
    pub ascent: Vec<u32>,
    /// One steepest-descent step per point; minima point to themselves.
    pub descent: Vec<u32>,
    pub max_of: Vec<u32>,
    pub min_of: Vec<u32>,
    pub maxima: Vec<u32>,
    pub minima: Vec<u32>,
}

#[derive(Clone, Copy)]
enum Direction {
    Up,
    Down,
}

/// Neighbor with the largest difference quotient `(f(q) - f(p)) / |q - p|`
/// in the given direction, or `p` itself if no neighbor is strictly better.
fn steepest(ds: &Dataset, g: &NeighborhoodGraph, p: usize, dir: Direction) -> u32 {
    let f = ds.values();
    let mut best = p as u32;
    let mut best_slope = 0.0;
    for &q in g.neighbors(p) {
        let rise = match dir {
            Direction::Up => f[q as usize] - f[p],
            Direction::Down => f[p] - f[q as usize],
        };
        if rise <= 0.0 {
            continue;
        }
        let dist = sqrt(squared_distance(ds.point(p), ds.point(q as usize)));
        let slope = if dist == 0.0 {
            f64::INFINITY
        } else {
            rise / dist
        };
        // Neighbor lists are sorted, so the strict comparison keeps the
        // smaller index on exact ties.
        if best as usize == p || slope > best_slope {
            best = q;
            best_slope = slope;
        }
    }
    best
}

fn resolve(step: &[u32]) -> Vec<u32> {
    let n = step.len();
    let mut target = vec![u32::MAX; n];
    let mut path = Vec::new();
    for s in 0..n {
        let mut p = s;
        while target[p] == u32::MAX && step[p] as usize != p {
            path.push(p);
            p = step[p] as usize;
        }
        let end = if target[p] == u32::MAX {
            p as u32
        } else {
            target[p]
        };
        target[p] = end;
        for q in path.drain(..) {
            target[q] = end;
        }
    }
    target
}

/// Trace steepest ascent and descent from every point to the extremum it
/// reaches. A point with no strictly higher (lower) neighbor is a maximum
/// (minimum); a constant function makes every point both.
pub fn compute_flow(ds: &Dataset, g: &NeighborhoodGraph) -> FlowAssignment {
    let n = ds.len();
    let ascent: Vec<u32> = (0..n).map(|p| steepest(ds, g, p, Direction::Up)).collect();
    let descent: Vec<u32> = (0..n)
        .map(|p| steepest(ds, g, p, Direction::Down))
        .collect();
    let maxima = (0..n as u32).filter(|&p| ascent[p as usize] == p).collect();
    let minima = (0..n as u32)
        .filter(|&p| descent[p as usize] == p)
        .collect();
    FlowAssignment {
        max_of: resolve(&ascent),
        min_of: resolve(&descent),
        ascent,
        descent,
        maxima,
        minima,
    }
}
