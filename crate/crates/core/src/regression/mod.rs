//! Partition-local linear models and the scores built on them.
//!
//! Models are fit on standardized data by the closed-form normal equations,
//! with the intercept handled by centering and never penalized:
//!
//! ```text
//! ols:   min |X b + b0 - y|^2
//! ridge: min |X b + b0 - y|^2 + lambda |b|^2
//! ```
//!
//! Rank-deficient systems (few points, collinear inputs) get the
//! minimum-norm solution.

mod curve;
mod dims;
mod measures;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SymmetricEigen;

pub use curve::{fit_inverse_curve, CurveSample, InverseCurve};
pub use dims::{cosine_similarity, dim_score_vector, fit_dim_models};
pub use measures::{
    register_regression_measures, set_curve_params, set_fit_kind, set_reference, RegressionConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("curve needs at least 2 samples, got {0}")]
    InvalidSampleCount(usize),
    #[error("no points to fit")]
    NoPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FitKind {
    Ols,
    Ridge { lambda: f64 },
}

impl FitKind {
    fn penalty(self) -> f64 {
        match self {
            FitKind::Ols => 0.0,
            FitKind::Ridge { lambda } => lambda,
        }
    }
}

impl Default for FitKind {
    fn default() -> Self {
        FitKind::Ridge { lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub fit: FitKind,
}

impl LinearModel {
    pub fn dims(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.intercept
    }
}

/// Row-major samples: `x` holds `y.len()` rows of `dims` values.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dims: usize,
}

impl<'a> Samples<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], dims: usize) -> Self {
        debug_assert_eq!(x.len(), y.len() * dims);
        Self { x, y, dims }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.dims..(i + 1) * self.dims]
    }

    /// Column `dim` as a one-dimensional sample set.
    pub fn column(&self, dim: usize) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.x[i * self.dims + dim])
            .collect()
    }
}

/// Fit a linear model by the normal equations on centered data.
pub fn fit_model(samples: Samples<'_>, fit: FitKind) -> Result<LinearModel, RegressionError> {
    let m = samples.len();
    if m == 0 {
        return Err(RegressionError::NoPoints);
    }
    let d = samples.dims;
    let mf = m as f64;
    let mut x_mean = alloc::vec![0.0; d];
    for i in 0..m {
        for (acc, v) in x_mean.iter_mut().zip(samples.row(i)) {
            *acc += v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v /= mf);
    let y_mean = samples.y.iter().sum::<f64>() / mf;

    let mut gram = alloc::vec![0.0; d * d];
    let mut rhs = alloc::vec![0.0; d];
    let mut centered = alloc::vec![0.0; d];
    for i in 0..m {
        for (c, (v, mu)) in centered.iter_mut().zip(samples.row(i).iter().zip(&x_mean)) {
            *c = v - mu;
        }
        let yc = samples.y[i] - y_mean;
        for r in 0..d {
            rhs[r] += centered[r] * yc;
            for c in r..d {
                gram[r * d + c] += centered[r] * centered[c];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            gram[r * d + c] = gram[c * d + r];
        }
    }
    let coefficients = SymmetricEigen::new(&gram, d).solve_shifted(&rhs, fit.penalty());
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(LinearModel {
        coefficients,
        intercept,
        fit,
    })
}

/// Coefficient of determination `1 - SSE / SST`.
///
/// When the observed values are all equal, the score is 1.0 for an exact
/// fit and negative infinity otherwise.
pub fn r2_score(model: &LinearModel, samples: Samples<'_>) -> f64 {
    let m = samples.len();
    if m == 0 {
        return f64::NAN;
    }
    let mean = samples.y.iter().sum::<f64>() / m as f64;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..m {
        let r = samples.y[i] - model.predict(samples.row(i));
        let t = samples.y[i] - mean;
        sse += r * r;
        sst += t * t;
    }
    let constant = samples.y.iter().all(|&v| v == samples.y[0]);
    if constant || sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - sse / sst
}

/// Sum of squared residuals of `model` on `samples`.
pub fn sse(model: &LinearModel, samples: Samples<'_>) -> f64 {
    (0..samples.len())
        .map(|i| {
            let r = samples.y[i] - model.predict(samples.row(i));
            r * r
        })
        .sum()
}
