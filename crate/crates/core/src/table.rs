//! Table representations shared by ingestion, alignment, aggregation and scoring.
//!
//! Missing cells are `None` everywhere; no sentinel numbers are used. Every table
//! serializes to the same canonical TSV layout: the first row holds column headers
//! behind an empty top-left cell, the first column holds row headers, and missing
//! cells are empty strings.

use serde::{Deserialize, Serialize};

/// A value cell: a finite number or missing.
pub type Value = Option<f64>;

/// Pre-normalization grid as split from sampler text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTable {
    pub rows: Vec<Vec<String>>,
    pub source_id: usize,
}

impl RawTable {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// A single sampled table after header extraction and numeric conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major, `row_labels.len()` rows of `col_labels.len()` values.
    pub values: Vec<Vec<Value>>,
    pub source_id: usize,
}

impl NormalizedTable {
    /// Builds a table, checking grid shape and that every present value is finite.
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        values: Vec<Vec<Value>>,
        source_id: usize,
    ) -> Result<Self, TableError> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(TableError::Empty);
        }
        if values.len() != row_labels.len()
            || values.iter().any(|row| row.len() != col_labels.len())
        {
            return Err(TableError::Shape {
                rows: row_labels.len(),
                cols: col_labels.len(),
            });
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(TableError::NonFinite);
        }
        Ok(Self {
            row_labels,
            col_labels,
            values,
            source_id,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Value {
        self.values[row][col]
    }

    /// Swaps the roles of rows and columns.
    pub fn transpose(&self) -> Self {
        let values = (0..self.n_cols())
            .map(|c| (0..self.n_rows()).map(|r| self.values[r][c]).collect())
            .collect();
        Self {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            values,
            source_id: self.source_id,
        }
    }

    pub fn to_tsv(&self) -> String {
        write_tsv(&self.row_labels, &self.col_labels, |r, c| self.values[r][c])
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TableError {
    #[error("table has no rows or no columns")]
    Empty,
    #[error("value grid does not match {rows} row labels x {cols} column labels")]
    Shape { rows: usize, cols: usize },
    #[error("table contains a non-finite value")]
    NonFinite,
}

/// One consensus cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCell {
    pub value: Value,
    /// Number of sampled values that contributed to `value`.
    pub support: usize,
    /// Relative MAD; `None` when `value` is missing or zero.
    pub uncertainty: Option<f64>,
}

impl AggregatedCell {
    pub const MISSING: AggregatedCell = AggregatedCell {
        value: None,
        support: 0,
        uncertainty: None,
    };
}

/// Consensus table produced by the ensemble; labels are canonical cluster labels
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<AggregatedCell>>,
}

impl AggregatedTable {
    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn value(&self, row: usize, col: usize) -> Value {
        self.cells[row][col].value
    }

    /// Drops support and uncertainty, keeping labels and consensus values.
    pub fn to_normalized(&self, source_id: usize) -> NormalizedTable {
        NormalizedTable {
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            values: self
                .cells
                .iter()
                .map(|row| row.iter().map(|c| c.value).collect())
                .collect(),
            source_id,
        }
    }

    pub fn to_tsv(&self) -> String {
        write_tsv(&self.row_labels, &self.col_labels, |r, c| {
            self.cells[r][c].value
        })
    }

    /// Per-cell uncertainty as a TSV grid in the same layout as [`Self::to_tsv`].
    pub fn uncertainty_tsv(&self) -> String {
        write_tsv(&self.row_labels, &self.col_labels, |r, c| {
            self.cells[r][c].uncertainty
        })
    }
}

/// Renders a value with the shortest representation that parses back to the same `f64`.
pub fn format_value(v: Value) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn write_tsv(rows: &[String], cols: &[String], value: impl Fn(usize, usize) -> Value) -> String {
    let mut out = String::new();
    for col in cols {
        out.push('\t');
        out.push_str(col);
    }
    for (r, label) in rows.iter().enumerate() {
        out.push('\n');
        out.push_str(label);
        for c in 0..cols.len() {
            out.push('\t');
            out.push_str(&format_value(value(r, c)));
        }
    }
    out.push('\n');
    out
}
