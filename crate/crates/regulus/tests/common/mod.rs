#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regulus::{AnalysisBundle, AnalysisConfig};
use regulus_core::Dataset;

/// `n` points on the unit circle carrying two maxima and two minima of
/// distinct heights, so the cells form a ring of four.
pub fn ring_dataset(n: usize) -> Dataset {
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        x.extend_from_slice(&[t.cos(), t.sin()]);
        y.push((2.0 * t).cos() + 0.3 * t.cos() + 0.1 * t.sin());
    }
    Dataset::new(
        x,
        vec!["u".into(), "v".into()],
        vec![y],
        vec!["f".into()],
        "f",
    )
    .unwrap()
}

/// Two Gaussian bumps over the unit square with a second output.
pub fn two_bump_dataset(seed: u64, n: usize) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let p: [f64; 2] = [r.gen(), r.gen()];
        x.extend_from_slice(&p);
        let g = |c: [f64; 2], a: f64| {
            a * (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / 0.03).exp()
        };
        y.push(g([0.25, 0.45], 1.0) + g([0.75, 0.6], 0.8) + 0.005 * r.gen::<f64>());
        z.push(p[0] - p[1]);
    }
    Dataset::new(
        x,
        vec!["x0".into(), "x1".into()],
        vec![y, z],
        vec!["y".into(), "z".into()],
        "y",
    )
    .unwrap()
}

pub fn ring_bundle() -> AnalysisBundle {
    AnalysisBundle::analyze(
        ring_dataset(120),
        AnalysisConfig {
            k: 4,
            ..Default::default()
        },
    )
    .unwrap()
}
