//! Sampled multi-dimensional scalar data.
//!
//! A [`Dataset`] holds `n` samples of `d` input coordinates and one or more
//! output columns. One output, the *active* output, drives the topology.
//! Column statistics from before standardization are retained so values can
//! be mapped back to their original units.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{abs, order_free_sum, sqrt};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("need at least 1 input dimension")]
    NoInputs,
    #[error("need at least 1 output column")]
    NoOutputs,
    #[error("input matrix has {got} values, expected {n} x {d}")]
    ShapeMismatch { n: usize, d: usize, got: usize },
    #[error("output column `{name}` has {got} values, expected {n}")]
    OutputLength { name: String, n: usize, got: usize },
    #[error("{kind} names: expected {expected}, got {got}")]
    NameCount {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown output column `{0}`")]
    UnknownOutput(String),
}

/// Per-column location and scale, in the original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub scale: f64,
}

impl ColumnStats {
    pub const IDENTITY: Self = Self {
        mean: 0.0,
        scale: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major `n x d`.
    inputs: Vec<f64>,
    outputs: Vec<Vec<f64>>,
    active_output: usize,
    dim_names: Vec<String>,
    output_names: Vec<String>,
    /// Inputs first, then outputs. Identity until standardized.
    raw_stats: Vec<ColumnStats>,
}

impl Dataset {
    /// Build a dataset from raw values.
    ///
    /// `inputs` is row-major with `dim_names.len()` columns; each entry of
    /// `outputs` is one full column.
    pub fn new(
        inputs: Vec<f64>,
        dim_names: Vec<String>,
        outputs: Vec<Vec<f64>>,
        output_names: Vec<String>,
        active_output: &str,
    ) -> Result<Self, DatasetError> {
        let d = dim_names.len();
        if d == 0 {
            return Err(DatasetError::NoInputs);
        }
        if outputs.is_empty() {
            return Err(DatasetError::NoOutputs);
        }
        if output_names.len() != outputs.len() {
            return Err(DatasetError::NameCount {
                kind: "output",
                expected: outputs.len(),
                got: output_names.len(),
            });
        }
        if !inputs.len().is_multiple_of(d) {
            return Err(DatasetError::ShapeMismatch {
                n: inputs.len() / d,
                d,
                got: inputs.len(),
            });
        }
        let n = inputs.len() / d;
        if n < 2 {
            return Err(DatasetError::TooFewSamples(n));
        }
        for (name, col) in output_names.iter().zip(&outputs) {
            if col.len() != n {
                return Err(DatasetError::OutputLength {
                    name: name.clone(),
                    n,
                    got: col.len(),
                });
            }
        }
        let mut seen: Vec<&String> = dim_names.iter().chain(&output_names).collect();
        seen.sort();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(DatasetError::DuplicateColumn(w[0].clone()));
        }
        if let Some(i) = inputs.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: i / d,
                col: i % d,
            });
        }
        for (j, col) in outputs.iter().enumerate() {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row, col: d + j });
            }
        }
        let active = output_names
            .iter()
            .position(|o| o == active_output)
            .ok_or_else(|| DatasetError::UnknownOutput(active_output.into()))?;
        let raw_stats = alloc::vec![ColumnStats::IDENTITY; d + outputs.len()];
        Ok(Self {
            n,
            d,
            inputs,
            outputs,
            active_output: active,
            dim_names,
            output_names,
            raw_stats,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.d..(i + 1) * self.d]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn input(&self, row: usize, dim: usize) -> f64 {
        self.inputs[row * self.d + dim]
    }

    /// Values of the output that drives the topology.
    pub fn values(&self) -> &[f64] {
        &self.outputs[self.active_output]
    }

    pub fn output(&self, j: usize) -> &[f64] {
        &self.outputs[j]
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn active_output(&self) -> usize {
        self.active_output
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// Statistics for column `c` (inputs first, then outputs).
    pub fn raw_stats(&self) -> &[ColumnStats] {
        &self.raw_stats
    }

    /// Stats of the active output column.
    pub fn value_stats(&self) -> ColumnStats {
        self.raw_stats[self.d + self.active_output]
    }

    /// Range of the active output, `max - min`.
    pub fn value_range(&self) -> f64 {
        let (lo, hi) = self
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// Select a different output column to drive the topology.
    pub fn with_active_output(mut self, name: &str) -> Result<Self, DatasetError> {
        self.active_output = self
            .output_names
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| DatasetError::UnknownOutput(name.into()))?;
        Ok(self)
    }

    /// Shift and scale every input and output column to zero mean and unit
    /// (population) variance.
    ///
    /// Constant columns become all zeros with scale 1. Statistics compose, so
    /// `raw_stats` always refers to the values originally loaded.
    pub fn standardize(&self) -> Self {
        let mut out = self.clone();
        for dim in 0..self.d {
            let col: Vec<f64> = (0..self.n).map(|r| self.input(r, dim)).collect();
            let (scaled, stats) = standardize_column(&col);
            for (r, v) in scaled.into_iter().enumerate() {
                out.inputs[r * self.d + dim] = v;
            }
            out.raw_stats[dim] = compose(self.raw_stats[dim], stats);
        }
        for (j, col) in self.outputs.iter().enumerate() {
            let (scaled, stats) = standardize_column(col);
            out.outputs[j] = scaled;
            out.raw_stats[self.d + j] = compose(self.raw_stats[self.d + j], stats);
        }
        out
    }

    /// Map a value of column `c` back to original units.
    pub fn to_raw(&self, column: usize, value: f64) -> f64 {
        let s = self.raw_stats[column];
        value * s.scale + s.mean
    }

    /// Map a value of the active output back to original units.
    pub fn value_to_raw(&self, value: f64) -> f64 {
        self.to_raw(self.d + self.active_output, value)
    }

    /// Inverse of [`Dataset::value_to_raw`].
    pub fn value_from_raw(&self, raw: f64) -> f64 {
        let s = self.value_stats();
        (raw - s.mean) / s.scale
    }

    /// Reconstruct the raw dataset.
    pub fn destandardize(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.n {
            for c in 0..self.d {
                out.inputs[r * self.d + c] = self.to_raw(c, self.input(r, c));
            }
        }
        for (j, col) in self.outputs.iter().enumerate() {
            out.outputs[j] = col.iter().map(|&v| self.to_raw(self.d + j, v)).collect();
        }
        out.raw_stats
            .iter_mut()
            .for_each(|s| *s = ColumnStats::IDENTITY);
        out
    }

    /// Gather the rows `points` into a row-major matrix and a value vector.
    pub fn gather(&self, points: &[u32]) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(points.len() * self.d);
        let mut y = Vec::with_capacity(points.len());
        let values = self.values();
        for &p in points {
            x.extend_from_slice(self.point(p as usize));
            y.push(values[p as usize]);
        }
        (x, y)
    }
}

fn compose(outer: ColumnStats, inner: ColumnStats) -> ColumnStats {
    ColumnStats {
        mean: outer.mean + outer.scale * inner.mean,
        scale: outer.scale * inner.scale,
    }
}

fn standardize_column(col: &[f64]) -> (Vec<f64>, ColumnStats) {
    let n = col.len() as f64;
    let mean = order_free_sum(col) / n;
    let sq: Vec<f64> = col.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let sd = sqrt(order_free_sum(&sq) / n);
    let magnitude = col.iter().fold(0.0f64, |m, &v| m.max(abs(v)));
    if sd <= 16.0 * f64::EPSILON * magnitude || sd == 0.0 {
        return (
            alloc::vec![0.0; col.len()],
            ColumnStats { mean, scale: 1.0 },
        );
    }
    (
        col.iter().map(|&v| (v - mean) / sd).collect(),
        ColumnStats { mean, scale: sd },
    )
}
