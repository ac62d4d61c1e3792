use std::collections::HashMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::CorpusItem;
use super::{run_corpus, with_jobs, HarnessError, Result, RunConfig, RunRecord, SamplerKind};
use crate::ensemble::{replay, EnsembleConfig};
use crate::metrics::{rms_scores, to_triples, MetricConfig};
use crate::table::NormalizedTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Patience,
    Coverage,
    Tolerance,
    /// Cluster pruning fraction.
    Prune,
    /// Fixed sample budget with early stopping off.
    K,
    Temperature,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Patience => "patience",
            SweepAxis::Coverage => "coverage",
            SweepAxis::Tolerance => "tolerance",
            SweepAxis::Prune => "prune",
            SweepAxis::K => "k",
            SweepAxis::Temperature => "temperature",
        }
    }

    /// Sets the axis to `value`; leaves `cfg` untouched when the result is invalid.
    fn apply(self, value: f64, cfg: &mut RunConfig) -> Result<()> {
        let mut next = cfg.clone();
        self.set(value, &mut next)?;
        next.validate()?;
        *cfg = next;
        Ok(())
    }

    fn set(self, value: f64, cfg: &mut RunConfig) -> Result<()> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(HarnessError::Config(format!("{} needs a positive integer, got {v}", self.name())))
            }
        };
        match self {
            SweepAxis::Patience => cfg.ensemble.patience = count(value)?,
            SweepAxis::Coverage => cfg.ensemble.coverage = value,
            SweepAxis::Tolerance => cfg.ensemble.tolerance = value,
            SweepAxis::Prune => cfg.ensemble.align.prune_fraction = value,
            SweepAxis::K => {
                cfg.ensemble.k_max = count(value)?;
                cfg.ensemble.early_stopping = false;
            }
            SweepAxis::Temperature => cfg.sampler.temperature = value,
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "patience" => SweepAxis::Patience,
            "coverage" => SweepAxis::Coverage,
            "tolerance" => SweepAxis::Tolerance,
            "prune" => SweepAxis::Prune,
            "k" => SweepAxis::K,
            "temperature" => SweepAxis::Temperature,
            _ => return Err(HarnessError::UnknownAxis(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Mean ensemble F1 over entries with ground truth; `None` without any truth.
    pub f1: Option<f64>,
    pub mean_samples: f64,
    pub convergence_rate: f64,
    /// Entries whose run failed at this value.
    pub failed: usize,
}

pub fn rows_to_tsv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = format!("{}\tf1\tmean_samples\tconvergence_rate\tfailed\n", axis.name());
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.2}\t{:.4}\t{}\n",
            r.value,
            r.f1.map_or_else(|| "NA".to_string(), |f| format!("{f:.2}")),
            r.mean_samples,
            r.convergence_rate,
            r.failed
        ));
    }
    out
}

struct Run {
    f1: Option<f64>,
    samples: usize,
    converged: bool,
}

fn row(value: f64, runs: &[Option<Run>]) -> SweepRow {
    let ok: Vec<&Run> = runs.iter().flatten().collect();
    let mean = |xs: Vec<f64>| {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<f64>() / xs.len() as f64)
        }
    };
    SweepRow {
        value,
        f1: mean(ok.iter().filter_map(|r| r.f1).collect()),
        mean_samples: mean(ok.iter().map(|r| r.samples as f64).collect()).unwrap_or(0.0),
        convergence_rate: mean(ok.iter().map(|r| f64::from(u8::from(r.converged))).collect()).unwrap_or(0.0),
        failed: runs.len() - ok.len(),
    }
}

/// Re-runs the corpus once per value with fresh samples.
pub fn sweep(items: &[CorpusItem], cfg: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if axis == SweepAxis::Temperature && cfg.sampler_kind != SamplerKind::Vlm {
        return Err(HarnessError::Config(
            "a temperature sweep needs the vlm sampler; simulated draws ignore temperature".to_string(),
        ));
    }
    values
        .iter()
        .map(|&v| {
            let mut run_cfg = cfg.clone();
            axis.apply(v, &mut run_cfg)?;
            let runs: Vec<Option<Run>> = run_corpus(items, &run_cfg)
                .into_iter()
                .map(|o| {
                    o.result.ok().map(|r| Run {
                        f1: o.f1,
                        samples: r.convergence.samples_used,
                        converged: r.convergence.converged,
                    })
                })
                .collect();
            Ok(row(v, &runs))
        })
        .collect()
}

/// Re-aggregates stored draws once per value with early stopping on (off for the `k`
/// axis); never calls a sampler. Records should come from fixed-budget runs so stricter
/// settings have draws to consume.
pub fn sweep_stored(
    records: &[RunRecord],
    truths: &HashMap<String, NormalizedTable>,
    base: &EnsembleConfig,
    metric: &MetricConfig,
    axis: SweepAxis,
    values: &[f64],
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if axis == SweepAxis::Temperature {
        return Err(HarnessError::Config(
            "temperature cannot be swept over stored samples; run extract per temperature".to_string(),
        ));
    }
    let truth_triples: HashMap<&str, _> = truths.iter().map(|(k, t)| (k.as_str(), to_triples(t))).collect();
    let draws: Vec<_> = records.iter().map(RunRecord::draws).collect();
    values
        .iter()
        .map(|&v| {
            let mut cfg = RunConfig {
                ensemble: base.clone(),
                metric: *metric,
                ..Default::default()
            };
            // Stored runs are usually fixed-budget; replay them with early stopping so
            // convergence axes show their effect on samples used.
            cfg.ensemble.early_stopping = true;
            axis.apply(v, &mut cfg)?;
            let ens = cfg.ensemble;
            let runs: Vec<Option<Run>> = with_jobs(jobs, || {
                records
                    .par_iter()
                    .zip(&draws)
                    .map(|(rec, d)| {
                        let r = replay(d, &ens).ok()?;
                        if !r.convergence.converged && r.convergence.samples_used < ens.k_max {
                            log::warn!(
                                "{}: stored draws ran out after {} samples",
                                rec.id,
                                r.convergence.samples_used
                            );
                        }
                        let f1 = truth_triples
                            .get(rec.id.as_str())
                            .map(|t| rms_scores(&to_triples(&r.table), t, metric).f1);
                        Some(Run {
                            f1,
                            samples: r.convergence.samples_used,
                            converged: r.convergence.converged,
                        })
                    })
                    .collect()
            });
            Ok(row(v, &runs))
        })
        .collect()
}
