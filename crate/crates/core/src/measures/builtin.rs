use alloc::vec::Vec;

use super::{AttributeStore, MeasureDef, MeasureError, Scope, Value};
use crate::tree::NodeId;

/// Register the measures derived from tree structure and raw values:
///
/// - `lifespan` (parent scope)
/// - `min_value`, `max_value`: extreme active-output values in original units
/// - `size_norm`: fraction of all points in the node's range
/// - `shared_min_id`, `shared_max_id`: dense ids of the node's extrema, so
///   partitions sharing an extremum share an id
pub fn register_structural_measures(store: &AttributeStore) -> Result<(), MeasureError> {
    store.register(MeasureDef::new("lifespan", Scope::Parent, |ctx, q| {
        Ok(Value::Scalar(ctx.tree().lifespan(q.node)))
    }))?;
    store.register(MeasureDef::new("min_value", Scope::Node, |ctx, q| {
        let (lo, _) = value_bounds(ctx.data().values(), ctx.tree().points(q.node));
        Ok(Value::Scalar(ctx.data().value_to_raw(lo)))
    }))?;
    store.register(MeasureDef::new("max_value", Scope::Node, |ctx, q| {
        let (_, hi) = value_bounds(ctx.data().values(), ctx.tree().points(q.node));
        Ok(Value::Scalar(ctx.data().value_to_raw(hi)))
    }))?;
    store.register(MeasureDef::new("size_norm", Scope::Node, |ctx, q| {
        let tree = ctx.tree();
        Ok(Value::Scalar(
            tree.partition(q.node).len() as f64 / tree.point_count() as f64,
        ))
    }))?;

    let parts = store.tree().shared().partitions();
    let mins = dense(parts.iter().map(|p| p.min_ext));
    let maxs = dense(parts.iter().map(|p| p.max_ext));
    store.register(MeasureDef::new(
        "shared_min_id",
        Scope::Node,
        move |ctx, q| {
            Ok(Value::Scalar(rank(
                &mins,
                ctx.tree().partition(q.node).min_ext,
            )))
        },
    ))?;
    store.register(MeasureDef::new(
        "shared_max_id",
        Scope::Node,
        move |ctx, q| {
            Ok(Value::Scalar(rank(
                &maxs,
                ctx.tree().partition(q.node).max_ext,
            )))
        },
    ))?;
    Ok(())
}

fn value_bounds(values: &[f64], points: &[u32]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| {
            let v = values[p as usize];
            (a.min(v), b.max(v))
        })
}

fn dense(ids: impl Iterator<Item = u32>) -> Vec<u32> {
    let mut v: Vec<u32> = ids.collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn rank(sorted: &[u32], id: NodeId) -> f64 {
    sorted.binary_search(&id).map_or(f64::NAN, |i| i as f64)
}
