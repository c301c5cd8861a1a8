mod common;

use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use regulus::service::{router, MeasureValues, SharedBundle, TreeInfo};
use regulus::{AnalysisBundle, AnalysisConfig};
use regulus_core::tree::{cut_at_persistence, layout_tree, LayoutRect, ReduceFilter};
use regulus_core::{ProjectionSpec, Value};
use serde_json::{json, Value as Json};
use tower::ServiceExt;

fn shared(b: AnalysisBundle) -> SharedBundle {
    Arc::new(RwLock::new(b))
}

async fn call(
    state: &SharedBundle,
    method: &str,
    uri: &str,
    body: Option<Json>,
) -> (StatusCode, Json) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let json = if bytes.is_empty() {
        Json::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, json)
}

async fn get(state: &SharedBundle, uri: &str) -> Json {
    let (status, body) = call(state, "GET", uri, None).await;
    assert_eq!(status, StatusCode::OK, "{uri}: {body}");
    body
}

async fn post(state: &SharedBundle, uri: &str, body: Json) -> Json {
    let (status, out) = call(state, "POST", uri, Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{uri}: {out}");
    out
}

#[tokio::test]
async fn ring_tree_has_seven_nodes() {
    let s = shared(common::ring_bundle());
    let tree: TreeInfo = serde_json::from_value(get(&s, "/api/tree").await).unwrap();
    assert_eq!(tree.nodes.len(), 7);
    assert_eq!(tree.nodes.iter().filter(|n| n.parent.is_none()).count(), 1);
    assert_eq!(tree.nodes[0].range, [0, 120]);
    let layout: Vec<LayoutRect> =
        serde_json::from_value(get(&s, "/api/tree/layout?handle=orig").await).unwrap();
    assert_eq!(layout.len(), 7);
    assert_eq!(layout, layout_tree(&s.read().unwrap().original().tree));
}

#[tokio::test]
async fn measure_has_one_value_per_node() {
    let s = shared(common::ring_bundle());
    let m: MeasureValues =
        serde_json::from_value(get(&s, "/api/measure/fitness?handle=orig").await).unwrap();
    assert_eq!(m.nodes.len(), 7);
    assert_eq!(m.values.len(), 7);
    assert!(m
        .values
        .iter()
        .all(|v| matches!(v, Value::Scalar(x) if *x <= 1.0)));
    let child: MeasureValues =
        serde_json::from_value(get(&s, "/api/measure/child_fitness").await).unwrap();
    assert_eq!(child.values[0], Value::Undefined);
    let body = get(&s, "/api/measure/child_dim_fitness").await;
    assert_eq!(body["values"][0], json!({ "type": "undefined" }));

    let (status, body) = call(&s, "GET", "/api/measure/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
    let (status, _) = call(&s, "GET", "/api/measure/fitness?handle=d7", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn reduce_registers_a_chained_handle() {
    let b = AnalysisBundle::analyze(common::two_bump_dataset(3, 1500), AnalysisConfig::default())
        .unwrap();
    let orig_len = b.original().tree.len();
    let s = shared(b);
    get(&s, "/api/measure/fitness").await;
    let before = s.read().unwrap().compute_count();

    let tree: TreeInfo =
        serde_json::from_value(post(&s, "/api/tree/reduce", json!({ "minPoints": 100 })).await)
            .unwrap();
    assert_eq!(tree.handle, "d1");
    assert_eq!(tree.source.as_deref(), Some("orig"));
    assert!(tree.nodes.len() <= orig_len);
    assert!(tree.nodes.iter().all(|n| n.range[1] - n.range[0] >= 100));
    let layout: Vec<Json> =
        serde_json::from_value(get(&s, "/api/tree/layout?handle=d1").await).unwrap();
    assert_eq!(layout.len(), tree.nodes.len());

    // Same predicate through the library gives the same tree.
    {
        let b = s.read().unwrap();
        let lib = ReduceFilter {
            min_points: Some(100),
            ..Default::default()
        }
        .apply(&b.original().tree, &b.data)
        .unwrap();
        assert_eq!(lib.wiring(), b.entry("d1").unwrap().tree.wiring());
    }
    get(&s, "/api/measure/fitness?handle=d1").await;
    assert_eq!(s.read().unwrap().compute_count(), before);

    let second: TreeInfo = serde_json::from_value(
        post(
            &s,
            "/api/tree/reduce",
            json!({ "handle": "d1", "minLifespan": 0.05 }),
        )
        .await,
    )
    .unwrap();
    assert_eq!(
        (second.handle.as_str(), second.source.as_deref()),
        ("d2", Some("d1"))
    );
    let meta = get(&s, "/api/dataset/meta").await;
    assert_eq!(meta["handles"], json!(["orig", "d1", "d2"]));
    let (status, _) = call(
        &s,
        "POST",
        "/api/tree/reduce",
        Some(json!({ "handle": "zz" })),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn reference_drives_reference_fitness() {
    let s = shared(common::ring_bundle());
    let (status, _) = call(&s, "GET", "/api/measure/reference_fitness", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(
        post(&s, "/api/reference", json!({ "node": 2 })).await,
        json!({ "node": 2 })
    );
    assert_eq!(get(&s, "/api/reference").await, json!({ "node": 2 }));
    let r: MeasureValues =
        serde_json::from_value(get(&s, "/api/measure/reference_fitness").await).unwrap();
    let f: MeasureValues = serde_json::from_value(get(&s, "/api/measure/fitness").await).unwrap();
    let i = r.nodes.iter().position(|&n| n == 2).unwrap();
    assert_eq!(r.values[i], f.values[i]);
    let (status, _) = call(&s, "POST", "/api/reference", Some(json!({ "node": 70 }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    post(&s, "/api/reference", json!({ "node": null })).await;
    let (status, _) = call(&s, "GET", "/api/measure/reference_fitness", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn partition_endpoints() {
    let b = AnalysisBundle::analyze(common::two_bump_dataset(4, 300), AnalysisConfig::default())
        .unwrap();
    let raw = b.raw.clone();
    let leaf = b.original().tree.leaves().next().unwrap();
    let ids = b.original().tree.points(leaf).to_vec();
    let s = shared(b);

    let pts = get(&s, &format!("/api/partition/{leaf}/points?cols=x1,z")).await;
    assert_eq!(pts["ids"], json!(ids));
    let x1: Vec<f64> = ids.iter().map(|&i| raw.input(i as usize, 1)).collect();
    let z: Vec<f64> = ids.iter().map(|&i| raw.output(1)[i as usize]).collect();
    assert_eq!(pts["columns"]["x1"], json!(x1));
    assert_eq!(pts["columns"]["z"], json!(z));
    assert_eq!(pts["columns"].as_object().unwrap().len(), 2);
    let all = get(&s, "/api/partition/0/points").await;
    assert_eq!(all["columns"].as_object().unwrap().len(), 4);
    let (status, _) = call(&s, "GET", "/api/partition/0/points?cols=w", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&s, "GET", "/api/partition/9999/points", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let model = get(&s, &format!("/api/partition/{leaf}/model")).await;
    assert_eq!(model["model"]["type"], "model");
    assert_eq!(
        model["model"]["value"]["coefficients"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    assert_eq!(model["dimNames"], json!(["x0", "x1"]));

    let curve = get(&s, "/api/partition/0/curve").await;
    let samples = curve["curve"]["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 25);
    // Levels are in original units and span the output range.
    let ys: Vec<f64> = samples.iter().map(|s| s["y"].as_f64().unwrap()).collect();
    let out = raw.output(0);
    let lo = out.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((ys[0] - lo).abs() < 1e-9 && (ys[24] - hi).abs() < 1e-9);
    let custom = get(&s, "/api/partition/0/curve?bandwidth=0.5&samples=7").await;
    assert_eq!(custom["curve"]["samples"].as_array().unwrap().len(), 7);
    assert_eq!(custom["curve"]["bandwidth"], 0.5);
    let (status, _) = call(&s, "GET", "/api/partition/0/curve?bandwidth=-1", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn projection_endpoints_match_core() {
    let b = AnalysisBundle::analyze(common::two_bump_dataset(5, 300), AnalysisConfig::default())
        .unwrap();
    let s = shared(b);
    let presets = get(&s, "/api/projection/presets").await;
    assert_eq!(
        presets["star"],
        serde_json::to_value(ProjectionSpec::star(2)).unwrap()
    );

    let spec = ProjectionSpec {
        axes: vec![[0.3, -1.0], [2.0, 0.5]],
        y_axis: Some([0.0, 1.0]),
    };
    let saved = post(
        &s,
        "/api/projection/presets",
        json!({ "name": "mine", "spec": spec }),
    )
    .await;
    assert_eq!(
        saved["mine"],
        json!({ "axes": [[0.3, -1.0], [2.0, 0.5]], "yAxis": [0.0, 1.0] })
    );
    let (status, _) = call(
        &s,
        "POST",
        "/api/projection/presets",
        Some(json!({ "name": "bad", "spec": { "axes": [[1.0, 0.0]], "yAxis": null } })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let pts = post(&s, "/api/projection/points", json!({ "spec": spec })).await;
    let nodes: Vec<u32> = {
        let b = s.read().unwrap();
        let want = spec.project_dataset(&b.data).unwrap();
        for (i, w) in want.iter().enumerate() {
            assert_eq!(pts["x"][i].as_f64().unwrap(), w[0]);
            assert_eq!(pts["y"][i].as_f64().unwrap(), w[1]);
        }
        let cut = cut_at_persistence(&b.original().tree, 0.0).unwrap();
        cut.nodes.iter().copied().collect()
    };
    let edges = post(
        &s,
        "/api/projection/edges",
        json!({ "spec": spec, "nodes": nodes, "curves": true }),
    )
    .await;
    let edges = edges.as_array().unwrap();
    assert_eq!(edges.len(), nodes.len());
    let cut_json = get(&s, "/api/tree/cut?persistence=0").await;
    assert_eq!(cut_json["selection"]["nodes"], json!(nodes));
    let b = s.read().unwrap();
    for e in edges {
        let id = e["node"].as_u64().unwrap() as u32;
        let Value::Curve(c) = b.original().store.get("curve", id).unwrap() else {
            panic!("node {id} has no curve")
        };
        // A partition with a single output level collapses to one sample.
        let want = if b.original().tree.points(id).len() > 1 {
            25
        } else {
            1
        };
        assert_eq!(c.samples.len(), want);
        assert_eq!(e["curve"].as_array().unwrap().len(), want);
    }
    drop(b);
}

#[tokio::test]
async fn replayed_requests_give_identical_responses() {
    let log: Vec<(&str, &str, Option<Json>)> = vec![
        ("GET", "/api/tree", None),
        ("GET", "/api/measure/child_fitness", None),
        ("POST", "/api/tree/reduce", Some(json!({ "minPoints": 30 }))),
        ("POST", "/api/reference", Some(json!({ "node": 1 }))),
        ("GET", "/api/measure/reference_fitness?handle=d1", None),
        ("GET", "/api/tree/layout?handle=d1", None),
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let s = shared(
            AnalysisBundle::analyze(common::two_bump_dataset(6, 300), AnalysisConfig::default())
                .unwrap(),
        );
        let mut out = Vec::new();
        for (m, u, b) in &log {
            out.push(call(&s, m, u, b.clone()).await);
        }
        runs.push(out);
    }
    assert_eq!(runs[0], runs[1]);
}
