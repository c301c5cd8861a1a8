#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use regulus_core::msc::{
    BasePartition, CancellationSequence, CancellationStep, CellKey, ExtremumKind, Merge,
};
use regulus_core::tree::build_regulus_tree;
use regulus_core::{Dataset, NodeId, RegulusTree};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn dataset(x: Vec<f64>, d: usize, y: Vec<f64>) -> Dataset {
    Dataset::new(x, names("x", d), vec![y], vec!["y".into()], "y").unwrap()
}

/// Bump centers on the edge midpoints of the unit square.
pub const BUMPS: [([f64; 2], f64); 4] = [
    ([0.5, 0.0], 1.0),
    ([1.0, 0.5], 0.9),
    ([0.5, 1.0], 0.8),
    ([0.0, 0.5], 0.7),
];
pub const BUMP_SIGMA: f64 = 0.15;

pub fn bumps(p: [f64; 2]) -> f64 {
    BUMPS
        .iter()
        .map(|(c, a)| {
            let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            a * (-r2 / (2.0 * BUMP_SIGMA * BUMP_SIGMA)).exp()
        })
        .sum()
}

/// `n` uniform samples of the four-bump function with Gaussian noise.
pub fn bump_dataset(seed: u64, n: usize, noise: f64) -> Dataset {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let p = [r.gen::<f64>(), r.gen::<f64>()];
        x.extend_from_slice(&p);
        let e = if noise > 0.0 {
            normal.sample(&mut r)
        } else {
            0.0
        };
        y.push(bumps(p) + e);
    }
    dataset(x, 2, y)
}

/// A random sum of a few Gaussian bumps and a linear trend in `d`
/// dimensions, sampled at `n` uniform points with noise.
pub fn random_smooth_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let k = r.gen_range(1..=5);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| r.gen::<f64>()).collect())
        .collect();
    let amps: Vec<f64> = (0..k).map(|_| r.gen_range(-1.0..1.0)).collect();
    let widths: Vec<f64> = (0..k).map(|_| r.gen_range(0.1..0.4)).collect();
    let trend: Vec<f64> = (0..d).map(|_| r.gen_range(-0.5..0.5)).collect();
    let noise = Normal::new(0.0, r.gen_range(0.0..0.05f64).max(1e-6)).unwrap();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = (0..d).map(|_| r.gen::<f64>()).collect();
        let mut v: f64 = p.iter().zip(&trend).map(|(a, b)| a * b).sum();
        for ((c, a), w) in centers.iter().zip(&amps).zip(&widths) {
            let r2: f64 = p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            v += a * (-r2 / (2.0 * w * w)).exp();
        }
        v += noise.sample(&mut r);
        x.extend_from_slice(&p);
        y.push(v);
    }
    dataset(x, d, y)
}

/// Rows of a row-major matrix.
pub fn rows(x: &[f64], d: usize) -> impl Iterator<Item = &[f64]> {
    x.chunks(d)
}

/// Tree over hand-picked point groups. Each merge `(a, b, persistence)` is
/// its own cancellation step and creates node `groups.len() + i`.
pub fn hand_tree(groups: &[Vec<u32>], merges: &[(u32, u32, f64)]) -> RegulusTree {
    let parts: Vec<BasePartition> = groups
        .iter()
        .map(|g| BasePartition {
            key: (g[0], g[0]),
            points: g.clone(),
        })
        .collect();
    let mut keys: Vec<CellKey> = parts.iter().map(|p| p.key).collect();
    let steps = merges
        .iter()
        .enumerate()
        .map(|(i, &(first, second, persistence))| {
            let key = keys[first as usize];
            keys.push(key);
            CancellationStep {
                persistence,
                kind: ExtremumKind::Maximum,
                dying: 0,
                surviving: 0,
                saddle: 0.0,
                merges: vec![Merge {
                    first,
                    second,
                    merged: (groups.len() + i) as u32,
                    key,
                }],
                relabels: Vec::new(),
            }
        })
        .collect();
    let seq = CancellationSequence {
        base_count: groups.len() as u32,
        initial_maxima: 0,
        initial_minima: 0,
        value_range: 1.0,
        steps,
    };
    build_regulus_tree(&parts, &seq).unwrap()
}

/// The node whose points are exactly `points`.
pub fn node_with_points(tree: &RegulusTree, points: &[u32]) -> NodeId {
    let mut want = points.to_vec();
    want.sort_unstable();
    tree.nodes()
        .find(|&id| {
            let mut have = tree.points(id).to_vec();
            have.sort_unstable();
            have == want
        })
        .expect("no node with these points")
}
