use super::relative_error;
use crate::assignment;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("no real value pairs were matched")]
    NoMatchedPairs,
}

fn distance_matrix(pred: &[f64], truth: &[f64]) -> Vec<Vec<f64>> {
    pred.iter()
        .map(|&p| truth.iter().map(|&g| relative_error(p, g).min(1.0)).collect())
        .collect()
}

/// Distances of the real-real pairs in the minimum-cost value matching.
pub fn rnss_match(pred: &[f64], truth: &[f64]) -> Vec<f64> {
    let d = distance_matrix(pred, truth);
    let a = assignment::solve(&d);
    a.pairs().map(|(i, j)| d[i][j]).collect()
}

/// Relative number set similarity in `[0, 1]`; unmatched entries on the larger side
/// each cost 1.
pub fn rnss(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len().max(truth.len());
    if n == 0 {
        return 1.0;
    }
    let matched: f64 = rnss_match(pred, truth).iter().sum();
    let unmatched = pred.len().abs_diff(truth.len()) as f64;
    1.0 - (matched + unmatched) / n as f64
}

/// Mean relative distance over matched real pairs.
pub fn rd(pred: &[f64], truth: &[f64]) -> Result<f64, MetricError> {
    let d = rnss_match(pred, truth);
    if d.is_empty() {
        return Err(MetricError::NoMatchedPairs);
    }
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}
