//! Consensus tables from repeated samples: cell-wise aggregation, per-cell uncertainty
//! and the adaptive sampling controller.

mod aggregate;
mod controller;
pub mod robust;

pub use aggregate::{aggregate, cell_uncertainty, summarize_uncertainty, update_is_stable, UncertaintySummary};
pub use controller::{
    replay, run_ensemble, ConvergenceState, EnsembleResult, SampleLog, SampleStatus, UpdateLog,
};
pub use robust::robust_estimate;

use crate::align::AlignConfig;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Cell-wise aggregation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Median,
    Mean,
    Huber,
    /// Mean of the 60% of values closest to the median, computed per cell.
    WeightedConfidence,
    /// Median of values within 2 MAD of the median.
    Ransac,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Median,
        Strategy::Mean,
        Strategy::Huber,
        Strategy::WeightedConfidence,
        Strategy::Ransac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Median => "median",
            Strategy::Mean => "mean",
            Strategy::Huber => "huber",
            Strategy::WeightedConfidence => "weighted_confidence",
            Strategy::Ransac => "ransac",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub strategy: Strategy,
    pub k_max: usize,
    /// Consecutive stable updates required to stop.
    pub patience: usize,
    /// Fraction of cells that must be unchanged for an update to count as stable.
    pub coverage: f64,
    /// Relative change under which a cell counts as unchanged.
    pub tolerance: f64,
    pub initial_samples: usize,
    /// When false the controller always draws `k_max` samples; convergence is still tracked.
    pub early_stopping: bool,
    pub align: AlignConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Median,
            k_max: 20,
            patience: 2,
            coverage: 0.95,
            tolerance: 0.01,
            initial_samples: 2,
            early_stopping: true,
            align: AlignConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |msg: String| Err(EnsembleError::InvalidConfig(msg));
        if self.initial_samples < 2 {
            return bad(format!("initial_samples must be >= 2, got {}", self.initial_samples));
        }
        if self.k_max < self.initial_samples {
            return bad(format!(
                "k_max ({}) must be >= initial_samples ({})",
                self.k_max, self.initial_samples
            ));
        }
        if self.patience < 1 {
            return bad("patience must be >= 1".to_string());
        }
        for (name, v) in [("coverage", self.coverage), ("tolerance", self.tolerance)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        self.align.validate().map_err(EnsembleError::InvalidConfig)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum EnsembleError {
    #[error("no sampled table contributed a retained row and column cluster")]
    EmptyEnsemble,
    #[error("all {0} samples failed")]
    NoValidSamples(usize),
    #[error("duplicate source_id {0} in ensemble input")]
    DuplicateSource(usize),
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
}
