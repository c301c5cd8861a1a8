//! Delimited tables with a header row.
//!
//! Input columns come first. Outputs are either the columns after a marker
//! column named `|`, or the columns named explicitly, which takes precedence
//! over the marker.

use std::io::Read;

use regulus_core::{Dataset, DatasetError};
use thiserror::Error;

pub const MARKER: &str = "|";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("table has no header row")]
    MissingHeader,
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("no output columns: add a {MARKER:?} marker column or name the outputs")]
    NoOutputs,
    #[error("unknown output column {0:?}")]
    UnknownOutput(String),
    #[error("non-numeric value {value:?} at (row {row}, col {col})")]
    NonNumeric {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("non-finite value at (row {row}, col {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has {got} cells, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// How to split columns into inputs and outputs.
#[derive(Debug, Clone, Default)]
pub struct TableOptions {
    /// Output column names; overrides the marker column.
    pub outputs: Option<Vec<String>>,
    /// Output driving the topology; the first output by default.
    pub target: Option<String>,
}

/// Read a comma-delimited table into a raw (unstandardized) dataset.
/// Rows and columns in error messages count from 0, excluding the header.
pub fn load_table<R: Read>(source: R, options: &TableOptions) -> Result<Dataset, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r?.iter().map(str::to_owned).collect(),
        None => return Err(TableError::MissingHeader),
    };
    if header.iter().all(String::is_empty) {
        return Err(TableError::MissingHeader);
    }
    let mut seen = std::collections::BTreeSet::new();
    for name in header.iter().filter(|h| *h != MARKER) {
        if !seen.insert(name) {
            return Err(TableError::DuplicateColumn(name.clone()));
        }
    }

    let marker = header.iter().position(|h| h == MARKER);
    let (input_cols, output_cols): (Vec<usize>, Vec<usize>) = match (&options.outputs, marker) {
        (Some(names), _) => {
            let mut outs = Vec::with_capacity(names.len());
            for n in names {
                let i = header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| TableError::UnknownOutput(n.clone()))?;
                outs.push(i);
            }
            let ins = (0..header.len())
                .filter(|i| !outs.contains(i) && Some(*i) != marker)
                .collect();
            (ins, outs)
        }
        (None, Some(m)) => ((0..m).collect(), (m + 1..header.len()).collect()),
        (None, None) => return Err(TableError::NoOutputs),
    };
    if output_cols.is_empty() {
        return Err(TableError::NoOutputs);
    }

    let mut inputs = Vec::new();
    let mut outputs: Vec<Vec<f64>> = vec![Vec::new(); output_cols.len()];
    for (row, record) in records.enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(TableError::RowLength {
                row,
                expected: header.len(),
                got: record.len(),
            });
        }
        let cell = |col: usize| -> Result<f64, TableError> {
            let text = &record[col];
            let v: f64 = text.parse().map_err(|_| TableError::NonNumeric {
                row,
                col,
                value: text.to_owned(),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(TableError::NonFinite { row, col })
            }
        };
        for &c in &input_cols {
            inputs.push(cell(c)?);
        }
        for (out, &c) in outputs.iter_mut().zip(&output_cols) {
            out.push(cell(c)?);
        }
    }

    let dim_names = input_cols.iter().map(|&i| header[i].clone()).collect();
    let output_names: Vec<String> = output_cols.iter().map(|&i| header[i].clone()).collect();
    let target = match &options.target {
        Some(t) if !output_names.contains(t) => return Err(TableError::UnknownOutput(t.clone())),
        Some(t) => t.clone(),
        None => output_names[0].clone(),
    };
    Ok(Dataset::new(
        inputs,
        dim_names,
        outputs,
        output_names,
        &target,
    )?)
}

/// Write a raw dataset in the marker layout read by [`load_table`].
pub fn write_table<W: std::io::Write>(data: &Dataset, sink: W) -> Result<(), TableError> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<&str> = data.dim_names().iter().map(String::as_str).collect();
    header.push(MARKER);
    header.extend(data.output_names().iter().map(String::as_str));
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(|v| v.to_string()).collect();
        row.push(String::new());
        row.extend((0..data.output_count()).map(|j| data.output(j)[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
