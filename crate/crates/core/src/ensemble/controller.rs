//! Adaptive sampling loop.
//!
//! Two initial samples are drawn and aggregated; afterwards every successfully parsed
//! sample triggers a re-aggregation that is compared against the previous aggregate.
//! Sampling stops once `patience` consecutive updates are stable or `k_max` draws have
//! been spent. Failed draws consume budget but trigger no update.

use serde::{Deserialize, Serialize};

use super::{aggregate, summarize_uncertainty, update_is_stable, EnsembleConfig, EnsembleError, UncertaintySummary};
use crate::ingest::ingest;
use crate::sampler::{ReplaySampler, Sampler, SamplerError};
use crate::table::{AggregatedTable, NormalizedTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    /// Samples used when the update happened.
    pub k: usize,
    pub fraction_unchanged: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceState {
    pub consecutive_stable: usize,
    pub converged: bool,
    /// First sample count at which the stopping criterion held, even when early
    /// stopping is disabled.
    pub converged_at: Option<usize>,
    pub samples_used: usize,
    pub per_update_log: Vec<UpdateLog>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum SampleStatus {
    Parsed,
    ParseFailed(String),
    SamplerFailed(String),
}

/// One draw as seen by the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLog {
    pub draw_index: usize,
    pub text: Option<String>,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub table: AggregatedTable,
    pub convergence: ConvergenceState,
    pub uncertainty: UncertaintySummary,
    pub raw_samples: Vec<NormalizedTable>,
    pub samples: Vec<SampleLog>,
}

struct Loop<'a, S: ?Sized> {
    sampler: &'a S,
    tables: Vec<NormalizedTable>,
    samples: Vec<SampleLog>,
    exhausted: bool,
}

impl<S: Sampler + ?Sized> Loop<'_, S> {
    /// Draws one sample; returns true when it yielded a table.
    fn draw(&mut self) -> bool {
        let draw_index = self.samples.len();
        let (text, status, table) = match self.sampler.sample(draw_index) {
            Err(SamplerError::Exhausted) => {
                self.exhausted = true;
                return false;
            }
            Err(e) => {
                log::warn!("draw {draw_index}: sampler failed: {e}");
                (None, SampleStatus::SamplerFailed(e.to_string()), None)
            }
            Ok(text) => match ingest(&text, draw_index) {
                Ok(t) => (Some(text), SampleStatus::Parsed, Some(t)),
                Err(e) => {
                    log::debug!("draw {draw_index}: {e}");
                    (Some(text), SampleStatus::ParseFailed(e.to_string()), None)
                }
            },
        };
        self.samples.push(SampleLog {
            draw_index,
            text,
            status,
        });
        match table {
            Some(t) => {
                self.tables.push(t);
                true
            }
            None => false,
        }
    }
}

/// Runs the sampling loop against `sampler`. Deterministic given the sampler's stream.
pub fn run_ensemble<S: Sampler + ?Sized>(sampler: &S, cfg: &EnsembleConfig) -> Result<EnsembleResult, EnsembleError> {
    cfg.validate()?;
    let mut lp = Loop {
        sampler,
        tables: Vec::new(),
        samples: Vec::new(),
        exhausted: false,
    };
    let mut state = ConvergenceState::default();

    for _ in 0..cfg.initial_samples {
        lp.draw();
        if lp.exhausted {
            break;
        }
    }
    let mut prev = if lp.tables.is_empty() {
        None
    } else {
        aggregate(&lp.tables, cfg).ok()
    };

    while lp.samples.len() < cfg.k_max && !lp.exhausted {
        if cfg.early_stopping && state.converged {
            break;
        }
        if !lp.draw() {
            continue;
        }
        let next = aggregate(&lp.tables, cfg).ok();
        let k = lp.samples.len();
        let (stable, fraction) = match (&prev, &next) {
            (Some(p), Some(n)) => update_is_stable(p, n, cfg),
            _ => (false, 0.0),
        };
        state.per_update_log.push(UpdateLog {
            k,
            fraction_unchanged: fraction,
            stable,
        });
        state.consecutive_stable = if stable { state.consecutive_stable + 1 } else { 0 };
        if state.consecutive_stable >= cfg.patience && !state.converged {
            state.converged = true;
            state.converged_at = Some(k);
        }
        prev = next;
    }
    state.samples_used = lp.samples.len();

    if lp.tables.is_empty() {
        return Err(EnsembleError::NoValidSamples(state.samples_used));
    }
    let table = prev.ok_or(EnsembleError::EmptyEnsemble)?;
    Ok(EnsembleResult {
        uncertainty: summarize_uncertainty(&table),
        table,
        convergence: state,
        raw_samples: lp.tables,
        samples: lp.samples,
    })
}

/// Re-runs the controller over stored draws (`Err` = recorded sampler failure).
pub fn replay(draws: &[Result<String, String>], cfg: &EnsembleConfig) -> Result<EnsembleResult, EnsembleError> {
    run_ensemble(&ReplaySampler::new(draws.to_vec()), cfg)
}
