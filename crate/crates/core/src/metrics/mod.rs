//! Table-matching metrics: RMS precision/recall/F1, RNSS, RD and the five-way error
//! breakdown, plus corpus-level reports.
//!
//! Tables are scored as multisets of `(row, column, value)` triples. Keys are matched with
//! a minimum-cost assignment on thresholded normalized Levenshtein distance; matched
//! pairs are then scored by key and value agreement.

mod breakdown;
mod report;
mod rms;
mod rnss;

pub use breakdown::{error_breakdown, ErrorBreakdown};
pub use report::{corpus_report, ranks, score_example, spearman, CorpusReport, ExampleInput, ExampleScores, GroupRow, ReportError, RunStats};
pub use rms::{rms_match, rms_scores, MatchedPair, RmsMatch, RmsScores};
pub use rnss::{rd, rnss, rnss_match, MetricError};

use serde::{Deserialize, Serialize};

use crate::align::normalized_levenshtein;
use crate::table::{AggregatedTable, NormalizedTable};

/// Joins row and column headers into one matching key; never occurs in parsed labels.
pub const KEY_SEPARATOR: char = '\u{1f}';

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub row_key: String,
    pub col_key: String,
    pub value: f64,
}

impl Triple {
    pub fn new(row_key: impl Into<String>, col_key: impl Into<String>, value: f64) -> Self {
        Self {
            row_key: row_key.into(),
            col_key: col_key.into(),
            value,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            row_key: self.col_key.clone(),
            col_key: self.row_key.clone(),
            value: self.value,
        }
    }

    fn key(&self) -> String {
        format!(
            "{}{KEY_SEPARATOR}{}",
            self.row_key.trim().to_lowercase(),
            self.col_key.trim().to_lowercase()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Key distances above this are clipped to 1.
    pub key_tau: f64,
    /// Relative value errors above this are clipped to 1.
    pub value_theta: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            key_tau: 0.5,
            value_theta: 0.1,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("key_tau", self.key_tau), ("value_theta", self.value_theta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Anything that can be flattened into scoring triples (one per present cell).
pub trait AsTriples {
    fn triples(&self) -> Vec<Triple>;
}

impl AsTriples for NormalizedTable {
    fn triples(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for (r, row) in self.values.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    out.push(Triple::new(self.row_labels[r].clone(), self.col_labels[c].clone(), *v));
                }
            }
        }
        out
    }
}

impl AsTriples for AggregatedTable {
    fn triples(&self) -> Vec<Triple> {
        self.to_normalized(0).triples()
    }
}

pub fn to_triples<T: AsTriples + ?Sized>(table: &T) -> Vec<Triple> {
    table.triples()
}

/// Thresholded normalized Levenshtein distance between concatenated keys.
pub fn key_distance(p: &Triple, t: &Triple, cfg: &MetricConfig) -> f64 {
    clip_key(normalized_levenshtein(&p.key(), &t.key()), cfg)
}

fn clip_key(nl: f64, cfg: &MetricConfig) -> f64 {
    if nl > cfg.key_tau {
        1.0
    } else {
        nl
    }
}

/// Relative error clipped to 1 above `value_theta`; a zero target matches only zero.
pub fn value_distance(p: f64, t: f64, cfg: &MetricConfig) -> f64 {
    let r = relative_error(p, t);
    if r > cfg.value_theta {
        1.0
    } else {
        r.min(1.0)
    }
}

pub(crate) fn relative_error(p: f64, t: f64) -> f64 {
    if t == 0.0 {
        if p == 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (p - t).abs() / t.abs()
    }
}

pub fn entry_similarity(p: &Triple, t: &Triple, cfg: &MetricConfig) -> f64 {
    (1.0 - key_distance(p, t, cfg)) * (1.0 - value_distance(p.value, t.value, cfg))
}
