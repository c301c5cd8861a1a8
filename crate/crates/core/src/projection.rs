//! Star-coordinate projection onto a steerable plane.
//!
//! Every input dimension owns a 2D vector; a point maps to the sum of its
//! coordinates times those vectors, plus the output times an optional
//! output vector.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::numeric::{cos, sin};
use crate::regression::InverseCurve;
use crate::tree::{NodeId, RegulusTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("projection has {expected} axes, got a point with {actual} coordinates")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("axis {dim} out of range for {dims} dimensions")]
    UnknownAxis { dim: usize, dims: usize },
    #[error("projection vectors must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectionSpec {
    pub axes: Vec<[f64; 2]>,
    pub y_axis: Option<[f64; 2]>,
}

impl ProjectionSpec {
    /// Unit vectors at angles `k pi / d`, no output axis.
    pub fn star(d: usize) -> Self {
        let axes = (0..d)
            .map(|k| {
                let a = PI * k as f64 / d as f64;
                [cos(a), sin(a)]
            })
            .collect();
        Self { axes, y_axis: None }
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn validate(&self) -> Result<(), ProjectionError> {
        let finite = self
            .axes
            .iter()
            .chain(self.y_axis.iter())
            .flatten()
            .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(ProjectionError::NonFinite)
        }
    }

    /// Image of one point with inputs `x` and output `y`.
    pub fn project(&self, x: &[f64], y: f64) -> Result<[f64; 2], ProjectionError> {
        if x.len() != self.axes.len() {
            return Err(ProjectionError::DimensionMismatch {
                expected: self.axes.len(),
                actual: x.len(),
            });
        }
        let mut out = [0.0; 2];
        for (v, &c) in self.axes.iter().zip(x) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        if let Some(v) = self.y_axis {
            out[0] += y * v[0];
            out[1] += y * v[1];
        }
        Ok(out)
    }

    /// Scale dimension `dim`'s vector and rotate it counter-clockwise by
    /// `rotate` radians.
    pub fn update_axis(
        &self,
        dim: usize,
        scale: f64,
        rotate: f64,
    ) -> Result<Self, ProjectionError> {
        let Some(&[vx, vy]) = self.axes.get(dim) else {
            return Err(ProjectionError::UnknownAxis {
                dim,
                dims: self.axes.len(),
            });
        };
        let (s, c) = (sin(rotate), cos(rotate));
        let mut next = self.clone();
        next.axes[dim] = [scale * (c * vx - s * vy), scale * (s * vx + c * vy)];
        next.validate()?;
        Ok(next)
    }

    /// Zero dimension `dim`'s vector.
    pub fn remove_axis(&self, dim: usize) -> Result<Self, ProjectionError> {
        self.update_axis(dim, 0.0, 0.0)
    }

    /// Images of every dataset point.
    pub fn project_dataset(&self, data: &Dataset) -> Result<Vec<[f64; 2]>, ProjectionError> {
        let values = data.values();
        (0..data.len())
            .map(|i| self.project(data.point(i), values[i]))
            .collect()
    }
}

/// The drawn edge of one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartitionEdge {
    pub node: NodeId,
    pub min_ext: u32,
    pub max_ext: u32,
    pub from: [f64; 2],
    pub to: [f64; 2],
    /// The projected inverse curve, if requested. Its ends need not meet
    /// `from` and `to`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<[f64; 2]>>,
}

/// One segment per selected node between its projected minimum and
/// maximum, using the extrema in effect at `level`. `curves`, when given,
/// yields the inverse curve of each node to project as a polyline.
pub fn project_partition_edges<F>(
    spec: &ProjectionSpec,
    tree: &RegulusTree,
    data: &Dataset,
    nodes: &[NodeId],
    level: f64,
    mut curves: Option<F>,
) -> Result<Vec<PartitionEdge>, ProjectionError>
where
    F: FnMut(NodeId) -> Option<InverseCurve>,
{
    let values = data.values();
    nodes
        .iter()
        .map(|&node| {
            let (min_ext, max_ext) = tree.partition(node).key_at(level);
            let at = |p: u32| spec.project(data.point(p as usize), values[p as usize]);
            let curve = match curves.as_mut().and_then(|f| f(node)) {
                Some(c) => Some(
                    c.samples
                        .iter()
                        .map(|s| spec.project(&s.x, s.y))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                None => None,
            };
            Ok(PartitionEdge {
                node,
                min_ext,
                max_ext,
                from: at(min_ext)?,
                to: at(max_ext)?,
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn axis_aligned_spec_reads_off_coordinates() {
        let spec = ProjectionSpec {
            axes: vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
            y_axis: None,
        };
        assert_eq!(spec.project(&[0.3, -2.0, 7.0], 5.0).unwrap(), [0.3, -2.0]);
    }

    #[test]
    fn zero_spec_collapses_to_origin() {
        let spec = ProjectionSpec {
            axes: vec![[0.0, 0.0]; 3],
            y_axis: Some([0.0, 0.0]),
        };
        assert_eq!(spec.project(&[1.0, 2.0, 3.0], 4.0).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn update_axis_cases() {
        let spec = ProjectionSpec {
            axes: vec![[1.0, 0.0], [0.5, 0.5]],
            y_axis: None,
        };
        assert_eq!(spec.update_axis(0, 1.0, 0.0).unwrap(), spec);
        let flipped = spec.update_axis(0, 1.0, PI).unwrap();
        assert!((flipped.axes[0][0] + 1.0).abs() < 1e-12 && flipped.axes[0][1].abs() < 1e-12);
        let turned = spec.update_axis(0, 2.0, PI / 2.0).unwrap();
        assert!(turned.axes[0][0].abs() < 1e-12 && (turned.axes[0][1] - 2.0).abs() < 1e-12);
        assert_eq!(turned.axes[1], spec.axes[1]);
        assert!(spec.update_axis(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn star_spec_spans_half_circle() {
        let spec = ProjectionSpec::star(4);
        assert_eq!(spec.axes[0], [1.0, 0.0]);
        assert!((spec.axes[2][0]).abs() < 1e-15 && (spec.axes[2][1] - 1.0).abs() < 1e-15);
        assert!(spec.y_axis.is_none());
    }

    #[test]
    fn mismatched_point_is_rejected() {
        let spec = ProjectionSpec::star(2);
        assert!(matches!(
            spec.project(&[1.0], 0.0),
            Err(ProjectionError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn serializes_with_camel_case_y_axis() {
        let spec = ProjectionSpec {
            axes: vec![[1.0, 0.0]],
            y_axis: None,
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"axes":[[1.0,0.0]],"yAxis":null}"#);
    }
}
