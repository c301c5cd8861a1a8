use alloc::vec::Vec;

use super::{
    cosine_similarity, dim_score_vector, fit_dim_models, fit_inverse_curve, fit_model, r2_score,
    FitKind, LinearModel, RegressionError, Samples,
};
use crate::measures::{
    param_hash, AttributeStore, Context, MeasureDef, MeasureError, Scope, Value,
};
use crate::tree::NodeId;

/// Parameters of the regression-based measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionConfig {
    pub fit: FitKind,
    /// Kernel bandwidth of the inverse curve, in standardized output units.
    pub bandwidth: f64,
    /// Output levels sampled along the inverse curve.
    pub curve_samples: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            fit: FitKind::default(),
            bandwidth: 0.3,
            curve_samples: 25,
        }
    }
}

fn fit_hash(fit: FitKind) -> u64 {
    match fit {
        FitKind::Ols => param_hash(&[0]),
        FitKind::Ridge { lambda } => param_hash(&[1, lambda.to_bits()]),
    }
}

fn model_hash(model: &LinearModel) -> u64 {
    let mut words: Vec<u64> = model.coefficients.iter().map(|c| c.to_bits()).collect();
    words.push(model.intercept.to_bits());
    words.push(fit_hash(model.fit));
    param_hash(&words)
}

fn expect_model(name: &str, v: Value) -> Result<LinearModel, MeasureError> {
    match v {
        Value::Model(m) => Ok(m),
        other => Err(MeasureError::TypeMismatch {
            measure: name.into(),
            expected: "model",
            actual: other.type_name(),
        }),
    }
}

fn expect_models(name: &str, v: Value) -> Result<Vec<LinearModel>, MeasureError> {
    match v {
        Value::Models(m) => Ok(m),
        other => Err(MeasureError::TypeMismatch {
            measure: name.into(),
            expected: "models",
            actual: other.type_name(),
        }),
    }
}

/// R^2 of `model` on the points of `node`.
fn score_on(ctx: &Context<'_>, model: &LinearModel, node: NodeId) -> f64 {
    let (x, y) = ctx.gather(node);
    r2_score(model, Samples::new(&x, &y, ctx.dims()))
}

fn pair(q: crate::measures::Query) -> Option<(NodeId, NodeId)> {
    q.other.map(|p| (q.node, p))
}

/// Register the regression measures:
///
/// - `model`: linear model of the node's points
/// - `fitness`: R^2 of the node's model on its own points
/// - `relative_fitness` (pair `(a, b)`): R^2 of `a`'s model on `b`'s points
/// - `parent_fitness`: parent's model on the node's points
/// - `child_fitness`: the node's model on the parent's points
/// - `dim_models`: one single-input model per dimension
/// - `relative_dim` (pair `(a, b)`): per-dimension R^2 of `a`'s models on
///   `b`'s points
/// - `child_dim_fitness`: cosine similarity of the node's per-dimension
///   scores on its own points and on its parent's points; undefined when a
///   score is not finite
/// - `curve`: inverse regression curve
///
/// Parent-relative measures are undefined at the root. `reference_fitness`
/// is registered by [`set_reference`].
pub fn register_regression_measures(
    store: &AttributeStore,
    config: RegressionConfig,
) -> Result<(), MeasureError> {
    set_fit_kind(store, config.fit)?;
    store.register(
        MeasureDef::new("fitness", Scope::Node, |ctx, q| {
            let model = expect_model("model", ctx.get("model", q.node)?)?;
            Ok(Value::Scalar(score_on(ctx, &model, q.node)))
        })
        .depends_on(&["model"]),
    )?;
    store.register(
        MeasureDef::new("relative_fitness", Scope::Pair, |ctx, q| {
            let (a, b) = pair(q).expect("pair query");
            let model = expect_model("model", ctx.get("model", a)?)?;
            Ok(Value::Scalar(score_on(ctx, &model, b)))
        })
        .depends_on(&["model"]),
    )?;
    store.register(
        MeasureDef::new("parent_fitness", Scope::Parent, |ctx, q| match pair(q) {
            Some((node, parent)) => ctx.get_pair("relative_fitness", parent, node),
            None => Ok(Value::Undefined),
        })
        .depends_on(&["relative_fitness"]),
    )?;
    store.register(
        MeasureDef::new("child_fitness", Scope::Parent, |ctx, q| match pair(q) {
            Some((node, parent)) => ctx.get_pair("relative_fitness", node, parent),
            None => Ok(Value::Undefined),
        })
        .depends_on(&["relative_fitness"]),
    )?;
    store.register(
        MeasureDef::new("relative_dim", Scope::Pair, |ctx, q| {
            let (a, b) = pair(q).expect("pair query");
            let models = expect_models("dim_models", ctx.get("dim_models", a)?)?;
            let (x, y) = ctx.gather(b);
            Ok(Value::Vector(dim_score_vector(
                &models,
                Samples::new(&x, &y, ctx.dims()),
            )))
        })
        .depends_on(&["dim_models"]),
    )?;
    store.register(
        MeasureDef::new("child_dim_fitness", Scope::Parent, |ctx, q| {
            let Some((node, parent)) = pair(q) else {
                return Ok(Value::Undefined);
            };
            let own = ctx.get_pair("relative_dim", node, node)?;
            let base = ctx.get_pair("relative_dim", node, parent)?;
            match (own, base) {
                (Value::Vector(a), Value::Vector(b)) => {
                    if a.iter().chain(&b).all(|v| v.is_finite()) {
                        Ok(Value::Scalar(cosine_similarity(&a, &b)))
                    } else {
                        Ok(Value::Undefined)
                    }
                }
                (other, _) => Err(MeasureError::TypeMismatch {
                    measure: "relative_dim".into(),
                    expected: "vector",
                    actual: other.type_name(),
                }),
            }
        })
        .depends_on(&["relative_dim"]),
    )?;
    set_curve_params(store, config.bandwidth, config.curve_samples)?;
    set_reference(store, None)
}

/// Switch the fit used by `model` and `dim_models`; cached values of both
/// and of everything built on them are dropped.
pub fn set_fit_kind(store: &AttributeStore, fit: FitKind) -> Result<(), MeasureError> {
    let h = fit_hash(fit);
    store.register(
        MeasureDef::new("model", Scope::Node, move |ctx, q| {
            let (x, y) = ctx.gather(q.node);
            Ok(Value::Model(fit_model(
                Samples::new(&x, &y, ctx.dims()),
                fit,
            )?))
        })
        .with_param(h),
    )?;
    store.register(
        MeasureDef::new("dim_models", Scope::Node, move |ctx, q| {
            let (x, y) = ctx.gather(q.node);
            Ok(Value::Models(fit_dim_models(
                Samples::new(&x, &y, ctx.dims()),
                fit,
            )?))
        })
        .with_param(h),
    )
}

/// Set the parameters of `curve`.
pub fn set_curve_params(
    store: &AttributeStore,
    bandwidth: f64,
    samples: usize,
) -> Result<(), MeasureError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(RegressionError::InvalidBandwidth(bandwidth).into());
    }
    if samples < 2 {
        return Err(RegressionError::InvalidSampleCount(samples).into());
    }
    store.register(
        MeasureDef::new("curve", Scope::Node, move |ctx, q| {
            let (x, y) = ctx.gather(q.node);
            Ok(Value::Curve(fit_inverse_curve(
                Samples::new(&x, &y, ctx.dims()),
                bandwidth,
                samples,
            )?))
        })
        .with_param(param_hash(&[bandwidth.to_bits(), samples as u64])),
    )
}

/// Set or clear the reference model scored by `reference_fitness`.
/// Querying `reference_fitness` without a reference is an error.
pub fn set_reference(
    store: &AttributeStore,
    reference: Option<LinearModel>,
) -> Result<(), MeasureError> {
    let def = match reference {
        Some(model) => {
            let h = model_hash(&model);
            MeasureDef::new("reference_fitness", Scope::Node, move |ctx, q| {
                Ok(Value::Scalar(score_on(ctx, &model, q.node)))
            })
            .with_param(h)
        }
        None => MeasureDef::new("reference_fitness", Scope::Node, |_, _| {
            Err(MeasureError::NoReference)
        }),
    };
    store.register(def)
}
