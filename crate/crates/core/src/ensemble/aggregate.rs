use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::robust::{mean, median, robust_estimate};
use super::{EnsembleConfig, EnsembleError};
use crate::align::{greedy_cluster, prune, LabelCluster};
use crate::table::{AggregatedCell, AggregatedTable, NormalizedTable, Value};

/// Clusters row and column labels across `tables`, prunes rare clusters and aggregates
/// every retained cell with `cfg.strategy`.
pub fn aggregate(tables: &[NormalizedTable], cfg: &EnsembleConfig) -> Result<AggregatedTable, EnsembleError> {
    let mut seen = HashSet::new();
    for t in tables {
        if !seen.insert(t.source_id) {
            return Err(EnsembleError::DuplicateSource(t.source_id));
        }
    }
    let n_tables = tables.len();
    let rows = retained_sorted(
        tables.iter().map(|t| (t.source_id, t.row_labels.clone())).collect(),
        n_tables,
        cfg,
    );
    let cols = retained_sorted(
        tables.iter().map(|t| (t.source_id, t.col_labels.clone())).collect(),
        n_tables,
        cfg,
    );
    if rows.is_empty() || cols.is_empty() {
        return Err(EnsembleError::EmptyEnsemble);
    }

    // positions[cluster][table] = label index inside that table, if the table contributed.
    let positions = |clusters: &[LabelCluster]| -> Vec<Vec<Option<usize>>> {
        clusters
            .iter()
            .map(|c| tables.iter().map(|t| c.position_in(t.source_id)).collect())
            .collect()
    };
    let row_pos = positions(&rows);
    let col_pos = positions(&cols);

    let mut cells = Vec::with_capacity(rows.len());
    for rp in &row_pos {
        let mut row_cells = Vec::with_capacity(cols.len());
        for cp in &col_pos {
            let values: Vec<f64> = tables
                .iter()
                .enumerate()
                .filter_map(|(k, t)| match (rp[k], cp[k]) {
                    (Some(i), Some(j)) => t.get(i, j),
                    _ => None,
                })
                .collect();
            row_cells.push(aggregate_cell(&values, cfg));
        }
        cells.push(row_cells);
    }
    Ok(AggregatedTable {
        row_labels: rows.into_iter().map(|c| c.canonical).collect(),
        col_labels: cols.into_iter().map(|c| c.canonical).collect(),
        cells,
    })
}

fn retained_sorted(labels: Vec<(usize, Vec<String>)>, n_tables: usize, cfg: &EnsembleConfig) -> Vec<LabelCluster> {
    let mut clusters = prune(greedy_cluster(&labels, &cfg.align), n_tables, &cfg.align);
    // Stable sort: clusters sharing a canonical label keep creation order.
    clusters.sort_by(|a, b| a.canonical.cmp(&b.canonical));
    clusters
}

fn aggregate_cell(values: &[f64], cfg: &EnsembleConfig) -> AggregatedCell {
    if values.is_empty() {
        return AggregatedCell::MISSING;
    }
    let value = robust_estimate(values, cfg.strategy);
    AggregatedCell {
        value: Some(value),
        support: values.len(),
        uncertainty: cell_uncertainty(values, value),
    }
}

/// Relative MAD of `values` about the aggregate; `None` when undefined.
pub fn cell_uncertainty(values: &[f64], aggregate: f64) -> Option<f64> {
    if values.is_empty() || aggregate == 0.0 {
        return None;
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - aggregate).abs()).collect();
    Some(median(&dev) / aggregate.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertaintySummary {
    pub u_med: Option<f64>,
    pub u_mean: Option<f64>,
    pub u_max: Option<f64>,
}

/// Median, mean and max of all defined per-cell uncertainties.
pub fn summarize_uncertainty(table: &AggregatedTable) -> UncertaintySummary {
    let us: Vec<f64> = table
        .cells
        .iter()
        .flatten()
        .filter_map(|c| c.uncertainty)
        .collect();
    if us.is_empty() {
        return UncertaintySummary::default();
    }
    UncertaintySummary {
        u_med: Some(median(&us)),
        u_mean: Some(mean(&us)),
        u_max: Some(us.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    }
}

/// Keys each cell by canonical labels; repeated labels get an occurrence index.
fn keyed_cells(t: &AggregatedTable) -> HashMap<(String, usize, String, usize), Value> {
    fn occurrences(labels: &[String]) -> Vec<(String, usize)> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        labels
            .iter()
            .map(|l| {
                let n = seen.entry(l.as_str()).or_default();
                *n += 1;
                (l.clone(), *n - 1)
            })
            .collect()
    }
    let rows = occurrences(&t.row_labels);
    let cols = occurrences(&t.col_labels);
    let mut out = HashMap::with_capacity(rows.len() * cols.len());
    for (i, (rl, ri)) in rows.iter().enumerate() {
        for (j, (cl, ci)) in cols.iter().enumerate() {
            out.insert((rl.clone(), *ri, cl.clone(), *ci), t.cells[i][j].value);
        }
    }
    out
}

/// Compares two successive aggregates. Returns whether the update is stable and the
/// fraction of cells (over the union of both tables' cell keys) left unchanged.
pub fn update_is_stable(prev: &AggregatedTable, next: &AggregatedTable, cfg: &EnsembleConfig) -> (bool, f64) {
    let old = keyed_cells(prev);
    let new = keyed_cells(next);
    let mut universe = 0usize;
    let mut unchanged = 0usize;
    for (key, old_value) in &old {
        universe += 1;
        if let Some(new_value) = new.get(key) {
            if cell_unchanged(*old_value, *new_value, cfg.tolerance) {
                unchanged += 1;
            }
        }
    }
    universe += new.keys().filter(|k| !old.contains_key(*k)).count();
    let fraction = if universe == 0 {
        1.0
    } else {
        unchanged as f64 / universe as f64
    };
    (fraction >= cfg.coverage, fraction)
}

fn cell_unchanged(old: Value, new: Value, tolerance: f64) -> bool {
    match (old, new) {
        (None, None) => true,
        (Some(0.0), Some(n)) => n == 0.0,
        (Some(o), Some(n)) => (n - o).abs() / o.abs() <= tolerance,
        _ => false,
    }
}
