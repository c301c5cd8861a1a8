use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::AtomicUsize;

use super::*;
use crate::tree::{reduce_tree, Partition, PartitionSet};

fn part(id: u32, persistence: f64, lo: u32, hi: u32) -> Partition {
    Partition {
        id,
        persistence,
        lo,
        hi,
        min_ext: lo,
        max_ext: hi - 1,
        extra_criticals: Vec::new(),
        key_changes: Vec::new(),
    }
}

// 0 [0,8) -> 1 [0,4) -> {2 [0,2), 3 [2,4)}, 4 [4,8)
fn fixture() -> (Arc<RegulusTree>, Arc<Dataset>) {
    let parts = vec![
        part(0, 0.5, 0, 8),
        part(1, 0.2, 0, 4),
        part(2, 0.0, 0, 2),
        part(3, 0.0, 2, 4),
        part(4, 0.0, 4, 8),
    ];
    let shared = Arc::new(PartitionSet::new(parts, (0..8).collect()).unwrap());
    let wiring = [
        (0, None),
        (1, Some(0)),
        (2, Some(1)),
        (3, Some(1)),
        (4, Some(0)),
    ];
    let tree = RegulusTree::from_parents(shared, &wiring, None).unwrap();
    let x: Vec<f64> = (0..8).map(f64::from).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| if *v < 4.0 { *v } else { 8.0 - v })
        .collect();
    let data = Dataset::new(
        x,
        vec!["x".to_string()],
        vec![y],
        vec!["y".to_string()],
        "y",
    )
    .unwrap();
    (Arc::new(tree), Arc::new(data))
}

fn size_measure(name: &str) -> MeasureDef {
    MeasureDef::new(name, Scope::Node, |ctx, q| {
        Ok(Value::Scalar(ctx.tree().partition(q.node).len() as f64))
    })
}

#[test]
fn values_are_computed_once() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    store.register(size_measure("size")).unwrap();
    assert_eq!(store.scalar("size", 1).unwrap(), Some(4.0));
    assert_eq!(store.scalar("size", 1).unwrap(), Some(4.0));
    assert_eq!(store.compute_count(), 1);
    assert_eq!(store.compute_count_of("size"), 1);
    assert_eq!(store.cached("size", Key::Node(1)), Some(Value::Scalar(4.0)));
}

#[test]
fn unknown_measure_and_node_are_errors() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    assert!(matches!(
        store.get("nope", 0),
        Err(MeasureError::UnknownMeasure(_))
    ));
    store.register(size_measure("size")).unwrap();
    assert!(matches!(
        store.get("size", 99),
        Err(MeasureError::Tree(TreeError::UnknownNode(99)))
    ));
}

#[test]
fn registration_rejects_unknown_dependencies_and_cycles() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    let dep = |name: &str, on: &[&str]| size_measure(name).depends_on(on);
    assert!(matches!(
        store.register(dep("a", &["b"])),
        Err(MeasureError::UnknownMeasure(_))
    ));
    assert!(matches!(
        store.register(dep("a", &["a"])),
        Err(MeasureError::Cycle(_))
    ));
    store.register(size_measure("a")).unwrap();
    store.register(dep("b", &["a"])).unwrap();
    // Replacing `a` with a version that depends on `b` closes a loop.
    assert!(matches!(
        store.register(dep("a", &["b"])),
        Err(MeasureError::Cycle(_))
    ));
}

#[test]
fn undeclared_dependency_is_refused() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    store.register(size_measure("size")).unwrap();
    store
        .register(MeasureDef::new("sneaky", Scope::Node, |ctx, q| {
            ctx.get("size", q.node)
        }))
        .unwrap();
    assert!(matches!(
        store.get("sneaky", 0),
        Err(MeasureError::UndeclaredDependency { .. })
    ));
}

#[test]
fn replacing_a_measure_drops_it_and_its_dependents_only() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    store.register(size_measure("size")).unwrap();
    store.register(size_measure("other")).unwrap();
    store
        .register(
            MeasureDef::new("double", Scope::Node, |ctx, q| {
                let v = ctx.get("size", q.node)?.as_scalar().unwrap();
                Ok(Value::Scalar(2.0 * v))
            })
            .depends_on(&["size"]),
        )
        .unwrap();
    store.get("double", 0).unwrap();
    store.get("other", 0).unwrap();
    assert_eq!(store.cache_len(), 3);
    store
        .register(MeasureDef::new("size", Scope::Node, |_, _| {
            Ok(Value::Scalar(1.0))
        }))
        .unwrap();
    assert_eq!(store.cache_len(), 1);
    assert_eq!(store.scalar("double", 0).unwrap(), Some(2.0));
}

#[test]
fn parent_scope_is_keyed_by_pair_and_root_by_node() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    store
        .register(MeasureDef::new("gap", Scope::Parent, |ctx, q| {
            Ok(Value::Scalar(ctx.tree().lifespan(q.node)))
        }))
        .unwrap();
    store.get("gap", 2).unwrap();
    store.get("gap", 0).unwrap();
    assert!(store.cached("gap", Key::Pair(2, 1)).is_some());
    assert!(store.cached("gap", Key::Node(0)).is_some());
    assert!(matches!(
        store.get_pair("gap", 2, 1),
        Err(MeasureError::WrongScope { .. })
    ));
}

#[test]
fn derived_store_reuses_preserved_values() {
    let (tree, data) = fixture();
    let base = Arc::new(AttributeStore::new(tree.clone(), data));
    register_structural_measures(&base).unwrap();
    for id in tree.nodes() {
        base.get("lifespan", id).unwrap();
        base.get("size_norm", id).unwrap();
    }
    // Dropping node 1 reattaches 2 and 3 to the root.
    let reduced = Arc::new(reduce_tree(&tree, |_, id| id != 1).unwrap());
    let derived = AttributeStore::derived(reduced, base.clone()).unwrap();
    for id in derived.tree().nodes() {
        derived.get("size_norm", id).unwrap();
    }
    assert_eq!(derived.compute_count(), 0);
    derived.get("lifespan", 4).unwrap();
    derived.get("lifespan", 0).unwrap();
    assert_eq!(derived.compute_count(), 0);
    // (2, 0) is a new pair.
    assert_eq!(derived.scalar("lifespan", 2).unwrap(), Some(0.5));
    assert_eq!(derived.compute_count(), 1);
    assert_eq!(base.scalar("lifespan", 2).unwrap(), Some(0.2));
}

#[test]
fn replaced_definition_breaks_the_chain() {
    let (tree, data) = fixture();
    let base = Arc::new(AttributeStore::new(tree.clone(), data));
    base.register(size_measure("size")).unwrap();
    base.get("size", 0).unwrap();
    let derived = AttributeStore::derived(tree, base.clone()).unwrap();
    derived
        .register(MeasureDef::new("size", Scope::Node, |_, _| {
            Ok(Value::Scalar(-1.0))
        }))
        .unwrap();
    assert_eq!(derived.scalar("size", 0).unwrap(), Some(-1.0));
}

#[test]
fn derived_store_needs_shared_partitions() {
    let (a, data) = fixture();
    let (b, _) = fixture();
    let base = Arc::new(AttributeStore::new(a, data));
    assert!(matches!(
        AttributeStore::derived(b, base),
        Err(MeasureError::ChainMismatch)
    ));
}

#[test]
fn snapshot_restore_round_trip() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree.clone(), data.clone());
    register_structural_measures(&store).unwrap();
    for id in tree.nodes() {
        store.get("max_value", id).unwrap();
        store.get("lifespan", id).unwrap();
    }
    let snap = store.snapshot();
    let fresh = AttributeStore::new(tree, data);
    register_structural_measures(&fresh).unwrap();
    assert_eq!(fresh.restore(snap.clone()).unwrap(), snap.len());
    assert_eq!(fresh.snapshot(), snap);
    store.get("max_value", 3).unwrap();
    assert_eq!(fresh.compute_count(), 0);

    let mut bad = snap;
    bad[0].measure = "mystery".into();
    assert!(matches!(
        fresh.restore(bad),
        Err(MeasureError::UnknownMeasure(_))
    ));
}

#[test]
fn structural_values() {
    let (tree, data) = fixture();
    let store = AttributeStore::new(tree, data);
    register_structural_measures(&store).unwrap();
    assert_eq!(store.scalar("max_value", 1).unwrap(), Some(3.0));
    assert_eq!(store.scalar("min_value", 4).unwrap(), Some(1.0));
    assert_eq!(store.scalar("size_norm", 4).unwrap(), Some(0.5));
    assert_eq!(store.scalar("lifespan", 0).unwrap(), Some(0.5));
    assert_eq!(store.scalar("lifespan", 3).unwrap(), Some(0.2));
    // min_ext values are 0, 0, 0, 2, 4.
    assert_eq!(store.scalar("shared_min_id", 1).unwrap(), Some(0.0));
    assert_eq!(store.scalar("shared_min_id", 4).unwrap(), Some(2.0));
}

#[test]
fn value_json_round_trips_non_finite_scalars() {
    for v in [
        Value::Scalar(f64::NEG_INFINITY),
        Value::Scalar(0.25),
        Value::Undefined,
        Value::Vector(vec![1.0, f64::INFINITY]),
    ] {
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Value>(&json).unwrap(), v);
    }
    let nan: Value = serde_json::from_str(r#"{"type":"scalar","value":"nan"}"#).unwrap();
    assert!(nan.as_scalar().unwrap().is_nan());
    assert_eq!(
        serde_json::to_string(&Value::Scalar(f64::NEG_INFINITY)).unwrap(),
        r#"{"type":"scalar","value":"-inf"}"#
    );
}

#[test]
fn concurrent_lookups_agree() {
    extern crate std;
    let (tree, data) = fixture();
    let calls = Arc::new(AtomicUsize::new(0));
    let store = Arc::new(AttributeStore::new(tree, data));
    let c = calls.clone();
    store
        .register(MeasureDef::new("count", Scope::Node, move |ctx, q| {
            c.fetch_add(1, Ordering::SeqCst);
            Ok(Value::Scalar(ctx.tree().partition(q.node).lo as f64))
        }))
        .unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let s = store.clone();
            std::thread::spawn(move || {
                (0..5)
                    .map(|id| s.scalar("count", id).unwrap())
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(store.cache_len(), 5);
}
