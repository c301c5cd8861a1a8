//! JSON API over an analysis bundle.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use regulus_core::projection::{project_partition_edges, PartitionEdge, ProjectionError};
use regulus_core::regression::{fit_inverse_curve, CurveSample, InverseCurve, Samples};
use regulus_core::tree::{cut_at_persistence, layout_tree, LayoutRect, ReduceFilter};
use regulus_core::{MeasureError, NodeId, ProjectionSpec, TreeError, Value};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bundle::{AnalysisBundle, BundleError, TreeEntry, ORIGINAL};

pub type SharedBundle = Arc<RwLock<AnalysisBundle>>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

fn measure_status(e: &MeasureError) -> StatusCode {
    match e {
        MeasureError::UnknownMeasure(_) | MeasureError::Tree(TreeError::UnknownNode(_)) => {
            StatusCode::NOT_FOUND
        }
        MeasureError::NoReference => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

impl From<BundleError> for ApiError {
    fn from(e: BundleError) -> Self {
        let status = match &e {
            BundleError::UnknownHandle(_) | BundleError::Tree(TreeError::UnknownNode(_)) => {
                StatusCode::NOT_FOUND
            }
            BundleError::Measure(m) => measure_status(m),
            _ => StatusCode::BAD_REQUEST,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<MeasureError> for ApiError {
    fn from(e: MeasureError) -> Self {
        Self {
            status: measure_status(&e),
            message: e.to_string(),
        }
    }
}

impl From<TreeError> for ApiError {
    fn from(e: TreeError) -> Self {
        BundleError::from(e).into()
    }
}

impl From<ProjectionError> for ApiError {
    fn from(e: ProjectionError) -> Self {
        Self::bad_request(e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(bundle: SharedBundle) -> Router {
    Router::new()
        .route("/api/dataset/meta", get(dataset_meta))
        .route("/api/tree", get(tree))
        .route("/api/tree/layout", get(tree_layout))
        .route("/api/tree/cut", get(tree_cut))
        .route("/api/tree/reduce", post(tree_reduce))
        .route("/api/measure/{name}", get(measure))
        .route("/api/reference", get(get_reference).post(set_reference))
        .route("/api/partition/{id}/points", get(partition_points))
        .route("/api/partition/{id}/model", get(partition_model))
        .route("/api/partition/{id}/curve", get(partition_curve))
        .route(
            "/api/projection/presets",
            get(get_presets).post(save_preset),
        )
        .route("/api/projection/points", post(project_points))
        .route("/api/projection/edges", post(project_edges))
        .with_state(bundle)
}

/// Serve until the process ends.
pub async fn serve(bundle: AnalysisBundle, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(RwLock::new(bundle)))).await
}

fn read(b: &SharedBundle) -> std::sync::RwLockReadGuard<'_, AnalysisBundle> {
    b.read().unwrap_or_else(|e| e.into_inner())
}

fn write(b: &SharedBundle) -> std::sync::RwLockWriteGuard<'_, AnalysisBundle> {
    b.write().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Deserialize)]
pub struct HandleQuery {
    handle: Option<String>,
}

impl HandleQuery {
    fn get(&self) -> &str {
        self.handle.as_deref().unwrap_or(ORIGINAL)
    }
}

async fn dataset_meta(State(b): State<SharedBundle>) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    let raw = &b.raw;
    let active = raw.output(raw.active_output());
    let lo = active.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = active.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Json(json!({
        "n": raw.len(),
        "d": raw.dims(),
        "dimNames": raw.dim_names(),
        "outputNames": raw.output_names(),
        "activeOutput": raw.output_names()[raw.active_output()],
        "valueRange": [lo, hi],
        "sha256": crate::bundle::EmbeddedDataset::from_dataset(raw).sha256(),
        "config": b.config,
        "handles": b.handles(),
        "reference": b.reference(),
    })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeInfo {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub persistence: f64,
    pub range: [u32; 2],
    pub min_ext: u32,
    pub max_ext: u32,
    pub extra_critical_count: usize,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeInfo {
    pub handle: String,
    pub source: Option<String>,
    pub filter: Option<ReduceFilter>,
    pub root: NodeId,
    pub nodes: Vec<NodeInfo>,
}

fn tree_info(handle: &str, e: &TreeEntry) -> TreeInfo {
    let t = &e.tree;
    TreeInfo {
        handle: handle.into(),
        source: e.source.clone(),
        filter: e.filter.clone(),
        root: t.root(),
        nodes: t
            .preorder()
            .into_iter()
            .map(|id| {
                let p = t.partition(id);
                NodeInfo {
                    id,
                    parent: t.parent(id),
                    persistence: p.persistence,
                    range: [p.lo, p.hi],
                    min_ext: p.min_ext,
                    max_ext: p.max_ext,
                    extra_critical_count: p.extra_criticals.len(),
                    size: p.exact_point_count(),
                }
            })
            .collect(),
    }
}

async fn tree(State(b): State<SharedBundle>, Query(q): Query<HandleQuery>) -> ApiResult<TreeInfo> {
    let b = read(&b);
    Ok(Json(tree_info(q.get(), b.entry(q.get())?)))
}

async fn tree_layout(
    State(b): State<SharedBundle>,
    Query(q): Query<HandleQuery>,
) -> ApiResult<Vec<LayoutRect>> {
    let b = read(&b);
    Ok(Json(layout_tree(&b.entry(q.get())?.tree)))
}

#[derive(Debug, Deserialize)]
struct CutQuery {
    handle: Option<String>,
    persistence: f64,
}

async fn tree_cut(
    State(b): State<SharedBundle>,
    Query(q): Query<CutQuery>,
) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    let handle = q.handle.as_deref().unwrap_or(ORIGINAL);
    let sel = cut_at_persistence(&b.entry(handle)?.tree, q.persistence)?;
    Ok(Json(
        json!({ "handle": handle, "persistence": q.persistence, "selection": sel }),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ReduceRequest {
    #[serde(default)]
    handle: Option<String>,
    #[serde(flatten)]
    filter: ReduceFilter,
}

async fn tree_reduce(
    State(b): State<SharedBundle>,
    Json(req): Json<ReduceRequest>,
) -> ApiResult<TreeInfo> {
    let mut b = write(&b);
    let source = req.handle.as_deref().unwrap_or(ORIGINAL);
    let handle = b.reduce(source, req.filter)?;
    Ok(Json(tree_info(&handle, b.entry(&handle)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValues {
    pub measure: String,
    pub handle: String,
    pub nodes: Vec<NodeId>,
    pub values: Vec<Value>,
}

async fn measure(
    State(b): State<SharedBundle>,
    Path(name): Path<String>,
    Query(q): Query<HandleQuery>,
) -> ApiResult<MeasureValues> {
    let b = read(&b);
    let e = b.entry(q.get())?;
    let nodes = e.tree.preorder();
    let values = nodes
        .iter()
        .map(|&id| e.store.get(&name, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(MeasureValues {
        measure: name,
        handle: q.get().into(),
        nodes,
        values,
    }))
}

#[derive(Debug, Deserialize)]
struct ReferenceRequest {
    node: Option<NodeId>,
}

async fn get_reference(State(b): State<SharedBundle>) -> Json<serde_json::Value> {
    Json(json!({ "node": read(&b).reference() }))
}

async fn set_reference(
    State(b): State<SharedBundle>,
    Json(req): Json<ReferenceRequest>,
) -> ApiResult<serde_json::Value> {
    let mut b = write(&b);
    b.set_reference(req.node)?;
    Ok(Json(json!({ "node": b.reference() })))
}

#[derive(Debug, Deserialize)]
struct PointsQuery {
    handle: Option<String>,
    cols: Option<String>,
}

fn node_in(
    b: &AnalysisBundle,
    handle: Option<&str>,
    id: NodeId,
) -> Result<Arc<regulus_core::RegulusTree>, ApiError> {
    let tree = b.entry(handle.unwrap_or(ORIGINAL))?.tree.clone();
    tree.check(id)?;
    Ok(tree)
}

async fn partition_points(
    State(b): State<SharedBundle>,
    Path(id): Path<NodeId>,
    Query(q): Query<PointsQuery>,
) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    let tree = node_in(&b, q.handle.as_deref(), id)?;
    let raw = &b.raw;
    let names: Vec<String> = match &q.cols {
        Some(c) if !c.is_empty() => c.split(',').map(str::to_owned).collect(),
        _ => raw
            .dim_names()
            .iter()
            .chain(raw.output_names())
            .cloned()
            .collect(),
    };
    let ids = tree.points(id);
    let mut columns = serde_json::Map::new();
    for name in names {
        let values: Vec<f64> = if let Some(j) = raw.dim_names().iter().position(|d| *d == name) {
            ids.iter().map(|&p| raw.input(p as usize, j)).collect()
        } else if let Some(j) = raw.output_names().iter().position(|d| *d == name) {
            ids.iter().map(|&p| raw.output(j)[p as usize]).collect()
        } else {
            return Err(ApiError::bad_request(format!("unknown column {name:?}")));
        };
        columns.insert(name, json!(values));
    }
    Ok(Json(json!({ "node": id, "ids": ids, "columns": columns })))
}

async fn partition_model(
    State(b): State<SharedBundle>,
    Path(id): Path<NodeId>,
    Query(q): Query<HandleQuery>,
) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    node_in(&b, q.handle.as_deref(), id)?;
    let store = &b.entry(q.get())?.store;
    let model = store.get("model", id)?;
    let fitness = store.get("fitness", id)?;
    Ok(Json(json!({
        "node": id,
        "dimNames": b.data.dim_names(),
        "model": model,
        "fitness": fitness,
    })))
}

#[derive(Debug, Deserialize)]
struct CurveQuery {
    handle: Option<String>,
    bandwidth: Option<f64>,
    samples: Option<usize>,
}

/// Curve in original units.
fn curve_to_raw(b: &AnalysisBundle, c: &InverseCurve) -> InverseCurve {
    let stats = b.data.raw_stats();
    InverseCurve {
        bandwidth: c.bandwidth,
        samples: c
            .samples
            .iter()
            .map(|s| CurveSample {
                y: b.data.value_to_raw(s.y),
                x: s.x
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| b.data.to_raw(j, v))
                    .collect(),
                sigma: s
                    .sigma
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * stats[j].scale)
                    .collect(),
            })
            .collect(),
    }
}

async fn partition_curve(
    State(b): State<SharedBundle>,
    Path(id): Path<NodeId>,
    Query(q): Query<CurveQuery>,
) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    node_in(&b, q.handle.as_deref(), id)?;
    let bandwidth = q.bandwidth.unwrap_or(b.config.bandwidth);
    let samples = q.samples.unwrap_or(b.config.curve_samples);
    let curve = if bandwidth == b.config.bandwidth && samples == b.config.curve_samples {
        match b
            .entry(q.handle.as_deref().unwrap_or(ORIGINAL))?
            .store
            .get("curve", id)?
        {
            Value::Curve(c) => c,
            other => {
                return Err(ApiError::bad_request(format!(
                    "curve is a {}",
                    other.type_name()
                )))
            }
        }
    } else {
        let tree = node_in(&b, q.handle.as_deref(), id)?;
        let (x, y) = b.data.gather(tree.points(id));
        fit_inverse_curve(Samples::new(&x, &y, b.data.dims()), bandwidth, samples)
            .map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    Ok(Json(
        json!({ "node": id, "curve": curve_to_raw(&b, &curve) }),
    ))
}

async fn get_presets(State(b): State<SharedBundle>) -> Json<BTreeMap<String, ProjectionSpec>> {
    Json(read(&b).presets.clone())
}

#[derive(Debug, Deserialize)]
struct PresetRequest {
    name: String,
    spec: ProjectionSpec,
}

async fn save_preset(
    State(b): State<SharedBundle>,
    Json(req): Json<PresetRequest>,
) -> ApiResult<BTreeMap<String, ProjectionSpec>> {
    let mut b = write(&b);
    check_spec(&b, &req.spec)?;
    b.presets.insert(req.name, req.spec);
    Ok(Json(b.presets.clone()))
}

fn check_spec(b: &AnalysisBundle, spec: &ProjectionSpec) -> Result<(), ApiError> {
    spec.validate()?;
    if spec.dims() != b.data.dims() {
        return Err(ProjectionError::DimensionMismatch {
            expected: b.data.dims(),
            actual: spec.dims(),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ProjectPointsRequest {
    spec: ProjectionSpec,
    #[serde(default)]
    handle: Option<String>,
    /// Restrict to one node's points.
    #[serde(default)]
    node: Option<NodeId>,
}

/// Positions of standardized points, column-oriented.
async fn project_points(
    State(b): State<SharedBundle>,
    Json(req): Json<ProjectPointsRequest>,
) -> ApiResult<serde_json::Value> {
    let b = read(&b);
    check_spec(&b, &req.spec)?;
    let ids: Vec<u32> = match req.node {
        Some(n) => node_in(&b, req.handle.as_deref(), n)?.points(n).to_vec(),
        None => (0..b.data.len() as u32).collect(),
    };
    let values = b.data.values();
    let mut xs = Vec::with_capacity(ids.len());
    let mut ys = Vec::with_capacity(ids.len());
    for &i in &ids {
        let [x, y] = req
            .spec
            .project(b.data.point(i as usize), values[i as usize])?;
        xs.push(x);
        ys.push(y);
    }
    Ok(Json(json!({ "ids": ids, "x": xs, "y": ys })))
}

#[derive(Debug, Deserialize)]
struct ProjectEdgesRequest {
    spec: ProjectionSpec,
    #[serde(default)]
    handle: Option<String>,
    nodes: Vec<NodeId>,
    #[serde(default)]
    level: f64,
    #[serde(default)]
    curves: bool,
}

async fn project_edges(
    State(b): State<SharedBundle>,
    Json(req): Json<ProjectEdgesRequest>,
) -> ApiResult<Vec<PartitionEdge>> {
    let b = read(&b);
    check_spec(&b, &req.spec)?;
    let e = b.entry(req.handle.as_deref().unwrap_or(ORIGINAL))?;
    for &n in &req.nodes {
        e.tree.check(n)?;
    }
    let mut failure = None;
    let curves = req
        .curves
        .then_some(|id: NodeId| match e.store.get("curve", id) {
            Ok(Value::Curve(c)) => Some(c),
            Ok(_) => None,
            Err(err) => {
                failure = Some(err);
                None
            }
        });
    let edges =
        project_partition_edges(&req.spec, &e.tree, &b.data, &req.nodes, req.level, curves)?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    Ok(Json(edges))
}
