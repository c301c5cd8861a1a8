use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{RegressionError, Samples};
use crate::numeric::{exp, sqrt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Output level.
    pub y: f64,
    /// Kernel estimate of the inputs at this level.
    pub x: Vec<f64>,
    /// Kernel-weighted standard deviation per dimension.
    pub sigma: Vec<f64>,
}

/// Inverse regression curve: expected inputs as a function of the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseCurve {
    pub bandwidth: f64,
    pub samples: Vec<CurveSample>,
}

/// Gaussian-kernel (Nadaraya-Watson) estimate of the inputs at `count`
/// equally spaced output levels spanning the samples' output range.
///
/// If every output is equal, the curve is a single sample at the mean
/// input.
pub fn fit_inverse_curve(
    samples: Samples<'_>,
    bandwidth: f64,
    count: usize,
) -> Result<InverseCurve, RegressionError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(RegressionError::InvalidBandwidth(bandwidth));
    }
    if samples.is_empty() {
        return Err(RegressionError::NoPoints);
    }
    if count < 2 {
        return Err(RegressionError::InvalidSampleCount(count));
    }
    let (lo, hi) = samples
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let levels: Vec<f64> = if lo == hi {
        vec![lo]
    } else {
        (0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                }
            })
            .collect()
    };

    let d = samples.dims;
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut logw = vec![0.0; samples.len()];
    let samples_out = levels
        .into_iter()
        .map(|level| {
            for (w, &y) in logw.iter_mut().zip(samples.y) {
                *w = -(y - level) * (y - level) * inv;
            }
            // Shift exponents so the nearest sample has weight 1.
            let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logw.iter().map(|&e| exp(e - top)).collect();
            let total: f64 = weights.iter().sum();
            let mut mean = vec![0.0; d];
            for (i, &w) in weights.iter().enumerate() {
                for (m, v) in mean.iter_mut().zip(samples.row(i)) {
                    *m += w * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= total);
            let mut var = vec![0.0; d];
            for (i, &w) in weights.iter().enumerate() {
                for ((s, v), m) in var.iter_mut().zip(samples.row(i)).zip(&mean) {
                    *s += w * (v - m) * (v - m);
                }
            }
            let sigma = var.iter().map(|s| sqrt((s / total).max(0.0))).collect();
            CurveSample {
                y: level,
                x: mean,
                sigma,
            }
        })
        .collect();
    Ok(InverseCurve {
        bandwidth,
        samples: samples_out,
    })
}
