use serde::{Deserialize, Serialize};

use super::{clip_key, value_distance, MetricConfig, Triple};
use crate::align::normalized_levenshtein;
use crate::assignment;

const TIE_BREAK: f64 = 1e-9;

/// Precision, recall and F1 as percentages in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RmsScores {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

/// One assigned prediction/truth pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub truth: usize,
    pub key_distance: f64,
    pub value_distance: f64,
}

impl MatchedPair {
    pub fn similarity(&self) -> f64 {
        (1.0 - self.key_distance) * (1.0 - self.value_distance)
    }
}

/// The winning orientation's scores and assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsMatch {
    pub scores: RmsScores,
    /// Whether the prediction's row and column keys were swapped.
    pub transposed: bool,
    pub pairs: Vec<MatchedPair>,
    pub n_pred: usize,
    pub n_truth: usize,
}

fn score_orientation(pred: &[Triple], truth: &[Triple], cfg: &MetricConfig, transposed: bool) -> RmsMatch {
    let (n, m) = (pred.len(), truth.len());
    let pred_keys: Vec<String> = pred.iter().map(Triple::key).collect();
    let truth_keys: Vec<String> = truth.iter().map(Triple::key).collect();
    let kappa: Vec<Vec<f64>> = pred_keys
        .iter()
        .map(|pk| {
            truth_keys
                .iter()
                .map(|tk| clip_key(normalized_levenshtein(pk, tk), cfg))
                .collect()
        })
        .collect();
    let delta: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| truth.iter().map(|t| value_distance(p.value, t.value, cfg)).collect())
        .collect();
    // Among key-optimal assignments prefer the most similar one, so the result does not
    // depend on triple order.
    let cost: Vec<Vec<f64>> = kappa
        .iter()
        .zip(&delta)
        .map(|(kr, dr)| {
            kr.iter()
                .zip(dr)
                .map(|(k, d)| k + TIE_BREAK * (1.0 - (1.0 - k) * (1.0 - d)))
                .collect()
        })
        .collect();
    let assignment = assignment::solve(&cost);
    let pairs: Vec<MatchedPair> = assignment
        .pairs()
        .map(|(i, j)| MatchedPair {
            pred: i,
            truth: j,
            key_distance: kappa[i][j],
            value_distance: delta[i][j],
        })
        .collect();
    let total: f64 = pairs.iter().map(MatchedPair::similarity).sum();
    let scores = match (n, m) {
        (0, 0) => RmsScores::from_pr(100.0, 100.0),
        (0, _) | (_, 0) => RmsScores::from_pr(0.0, 0.0),
        _ => RmsScores::from_pr(100.0 * total / n as f64, 100.0 * total / m as f64),
    };
    RmsMatch {
        scores,
        transposed,
        pairs,
        n_pred: n,
        n_truth: m,
    }
}

/// Scores `pred` against `truth` in both orientations and keeps the higher F1.
pub fn rms_match(pred: &[Triple], truth: &[Triple], cfg: &MetricConfig) -> RmsMatch {
    let direct = score_orientation(pred, truth, cfg, false);
    let swapped: Vec<Triple> = pred.iter().map(Triple::swapped).collect();
    let flipped = score_orientation(&swapped, truth, cfg, true);
    if flipped.scores.f1 > direct.scores.f1 {
        flipped
    } else {
        direct
    }
}

pub fn rms_scores(pred: &[Triple], truth: &[Triple], cfg: &MetricConfig) -> RmsScores {
    rms_match(pred, truth, cfg).scores
}
