use serde::{Deserialize, Serialize};

use super::{rms_match, MetricConfig, RmsMatch, Triple};

/// Percentages that sum to 100; `correct` is the example's F1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub correct: f64,
    pub value_err: f64,
    pub label_err: f64,
    pub missing: f64,
    pub extra: f64,
}

impl ErrorBreakdown {
    pub fn total(&self) -> f64 {
        self.correct + self.value_err + self.label_err + self.missing + self.extra
    }

    /// Builds the breakdown from an already computed match.
    ///
    /// A pair whose key distance is fully clipped shares nothing with its partner, so it
    /// is booked as one missing plus one extra entry rather than a label error.
    pub fn from_match(m: &RmsMatch) -> Self {
        let (mut value, mut label) = (0.0, 0.0);
        let mut matched = 0usize;
        let mut dead = 0usize;
        for p in &m.pairs {
            if p.key_distance >= 1.0 {
                dead += 1;
                continue;
            }
            matched += 1;
            value += (1.0 - p.key_distance) * p.value_distance;
            label += p.key_distance;
        }
        let missing = (m.n_truth - matched) as f64;
        let extra = (m.n_pred - matched) as f64;
        debug_assert!(m.n_truth >= matched + dead && m.n_pred >= matched + dead);

        let correct = m.scores.f1;
        let raw = value + label + missing + extra;
        let scale = if raw > 0.0 { (100.0 - correct) / raw } else { 0.0 };
        Self {
            correct,
            value_err: value * scale,
            label_err: label * scale,
            missing: missing * scale,
            extra: extra * scale,
        }
    }

    /// Field-wise mean; `None` for an empty slice.
    pub fn mean(items: &[ErrorBreakdown]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let sum = items.iter().fold(Self::default(), |a, b| Self {
            correct: a.correct + b.correct,
            value_err: a.value_err + b.value_err,
            label_err: a.label_err + b.label_err,
            missing: a.missing + b.missing,
            extra: a.extra + b.extra,
        });
        Some(Self {
            correct: sum.correct / n,
            value_err: sum.value_err / n,
            label_err: sum.label_err / n,
            missing: sum.missing / n,
            extra: sum.extra / n,
        })
    }
}

pub fn error_breakdown(pred: &[Triple], truth: &[Triple], cfg: &MetricConfig) -> ErrorBreakdown {
    ErrorBreakdown::from_match(&rms_match(pred, truth, cfg))
}
