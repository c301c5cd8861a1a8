//! Layout, measure and projection exports as JSON, CSV or SVG.

use std::fmt::Write as _;

use regulus_core::projection::{project_partition_edges, PartitionEdge};
use regulus_core::regression::InverseCurve;
use regulus_core::tree::{cut_at_persistence, layout_tree};
use regulus_core::{NodeId, ProjectionSpec, Value};
use serde_json::json;
use thiserror::Error;

use crate::bundle::{AnalysisBundle, BundleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum What {
    Layout,
    Measures,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{0:?} cannot be exported as {1:?}")]
    Unsupported(What, Format),
    #[error("unknown projection preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Measure(#[from] regulus_core::MeasureError),
    #[error(transparent)]
    Tree(#[from] regulus_core::TreeError),
    #[error(transparent)]
    Projection(#[from] regulus_core::projection::ProjectionError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct ExportOptions {
    pub what: What,
    pub format: Format,
    pub handle: String,
    pub measures: Vec<String>,
    pub preset: String,
    /// Persistence level of the projected selection.
    pub level: f64,
    pub curves: bool,
}

pub fn export(bundle: &AnalysisBundle, opts: &ExportOptions) -> Result<String, ExportError> {
    match opts.what {
        What::Layout => layout(bundle, opts),
        What::Measures => measures(bundle, opts),
        What::Projection => projection(bundle, opts),
    }
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn layout(bundle: &AnalysisBundle, opts: &ExportOptions) -> Result<String, ExportError> {
    let tree = &bundle.entry(&opts.handle)?.tree;
    let rects = layout_tree(tree);
    Ok(match opts.format {
        Format::Json => serde_json::to_string_pretty(&rects)?,
        Format::Csv => {
            let mut out = String::from("node,parent,x,width,y,height\n");
            for r in &rects {
                let parent = tree
                    .parent(r.node)
                    .map(|p| p.to_string())
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.node, parent, r.x, r.width, r.y, r.height
                )
                .unwrap();
            }
            out
        }
        Format::Svg => {
            let (w, h) = (1000.0, 600.0);
            let sx = w / tree.point_count() as f64;
            let mut out = svg_open(w, h);
            for r in &rects {
                writeln!(
                    out,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black" stroke-width="0.5"><title>{}</title></rect>"#,
                    r.x as f64 * sx,
                    h - (r.y + r.height) * h,
                    r.width as f64 * sx,
                    r.height * h,
                    r.node
                )
                .unwrap();
            }
            out.push_str("</svg>\n");
            out
        }
    })
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    ) + "\n"
}

fn measures(bundle: &AnalysisBundle, opts: &ExportOptions) -> Result<String, ExportError> {
    let e = bundle.entry(&opts.handle)?;
    let nodes = e.tree.preorder();
    let mut columns = Vec::with_capacity(opts.measures.len());
    for m in &opts.measures {
        let values = nodes
            .iter()
            .map(|&id| e.store.get(m, id))
            .collect::<Result<Vec<Value>, _>>()?;
        columns.push(values);
    }
    Ok(match opts.format {
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = opts
                .measures
                .iter()
                .zip(&columns)
                .map(|(m, v)| Ok((m.clone(), serde_json::to_value(v)?)))
                .collect::<Result<_, serde_json::Error>>()?;
            serde_json::to_string_pretty(
                &json!({ "handle": opts.handle, "nodes": nodes, "measures": map }),
            )?
        }
        Format::Csv => {
            let mut out = String::from("node");
            for m in &opts.measures {
                write!(out, ",{m}").unwrap();
            }
            out.push('\n');
            for (i, id) in nodes.iter().enumerate() {
                write!(out, "{id}").unwrap();
                for col in &columns {
                    let cell = col[i].as_scalar().map(csv_number).unwrap_or_default();
                    write!(out, ",{cell}").unwrap();
                }
                out.push('\n');
            }
            out
        }
        Format::Svg => return Err(ExportError::Unsupported(opts.what, opts.format)),
    })
}

fn projection(bundle: &AnalysisBundle, opts: &ExportOptions) -> Result<String, ExportError> {
    let spec: &ProjectionSpec = bundle
        .presets
        .get(&opts.preset)
        .ok_or_else(|| ExportError::UnknownPreset(opts.preset.clone()))?;
    let e = bundle.entry(&opts.handle)?;
    let nodes: Vec<NodeId> = cut_at_persistence(&e.tree, opts.level)?
        .nodes
        .into_iter()
        .collect();
    let mut failure = None;
    let curves = opts.curves.then_some(|id: NodeId| -> Option<InverseCurve> {
        match e.store.get("curve", id) {
            Ok(Value::Curve(c)) => Some(c),
            Ok(_) => None,
            Err(err) => {
                failure = Some(err);
                None
            }
        }
    });
    let edges = project_partition_edges(spec, &e.tree, &bundle.data, &nodes, opts.level, curves)?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    Ok(match opts.format {
        Format::Json => serde_json::to_string_pretty(&edges)?,
        Format::Csv => {
            let mut out = String::from("node,min_ext,max_ext,from_x,from_y,to_x,to_y\n");
            for e in &edges {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    e.node, e.min_ext, e.max_ext, e.from[0], e.from[1], e.to[0], e.to[1]
                )
                .unwrap();
            }
            out
        }
        Format::Svg => edges_svg(bundle, spec, &edges)?,
    })
}

fn edges_svg(
    bundle: &AnalysisBundle,
    spec: &ProjectionSpec,
    edges: &[PartitionEdge],
) -> Result<String, ExportError> {
    let points = spec.project_dataset(&bundle.data)?;
    let all = points.iter().copied().chain(edges.iter().flat_map(|e| {
        std::iter::once(e.from)
            .chain(std::iter::once(e.to))
            .chain(e.curve.iter().flatten().copied())
    }));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let (w, h, pad) = (800.0, 800.0, 20.0);
    let span = |k: usize| if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
    let at = |p: [f64; 2]| {
        (
            pad + (p[0] - lo[0]) / span(0) * (w - 2.0 * pad),
            h - pad - (p[1] - lo[1]) / span(1) * (h - 2.0 * pad),
        )
    };
    let mut out = svg_open(w, h);
    for &p in &points {
        let (x, y) = at(p);
        writeln!(
            out,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="1" fill="gray"/>"#
        )
        .unwrap();
    }
    for e in edges {
        let ((x1, y1), (x2, y2)) = (at(e.from), at(e.to));
        writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black"><title>{}</title></line>"#, e.node)
            .unwrap();
        if let Some(c) = &e.curve {
            let pts: Vec<String> = c
                .iter()
                .map(|&p| at(p))
                .map(|(x, y)| format!("{x:.3},{y:.3}"))
                .collect();
            writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="steelblue"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
