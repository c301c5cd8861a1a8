use alloc::vec::Vec;

use super::{fit_model, r2_score, FitKind, LinearModel, RegressionError, Samples};
use crate::numeric::sqrt;

/// One single-input model per dimension, model `i` fit on `(x_i, y)`.
pub fn fit_dim_models(
    samples: Samples<'_>,
    fit: FitKind,
) -> Result<Vec<LinearModel>, RegressionError> {
    (0..samples.dims)
        .map(|i| {
            let col = samples.column(i);
            fit_model(Samples::new(&col, samples.y, 1), fit)
        })
        .collect()
}

/// Score each single-input model on its own column of `samples`.
pub fn dim_score_vector(models: &[LinearModel], samples: Samples<'_>) -> Vec<f64> {
    models
        .iter()
        .enumerate()
        .map(|(i, model)| {
            let col = samples.column(i);
            r2_score(model, Samples::new(&col, samples.y, 1))
        })
        .collect()
}

/// `a . b / (|a| |b|)`, or 0 when either vector is zero. Non-finite
/// components propagate as NaN.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine similarity of mismatched vectors");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // sqrt(s * s) == s, so a vector against itself gives exactly 1.
    let norm = match na * nb {
        p if p.is_finite() && p > 0.0 => sqrt(p),
        _ => sqrt(na) * sqrt(nb),
    };
    (dot / norm).clamp(-1.0, 1.0)
}
