use serde::{Deserialize, Serialize};

use super::extract::CorpusItem;
use super::{run_corpus, Result, RunConfig, SamplerKind};
use crate::ensemble::{EnsembleResult, SampleStatus, Strategy};
use crate::metrics::{error_breakdown, rms_scores, spearman, to_triples, ErrorBreakdown, MetricConfig, Triple};
use crate::table::NormalizedTable;

/// Scores for one chart under one strategy and repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartScore {
    pub id: String,
    pub strategy: Strategy,
    pub repeat: usize,
    pub ensemble_f1: f64,
    /// Mean F1 of the individual draws; draws that failed to parse score 0.
    pub single_f1: f64,
    pub samples_used: usize,
    pub converged: bool,
    pub converged_at: Option<usize>,
    pub u_mean: Option<f64>,
    pub breakdown: ErrorBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub strategy: Strategy,
    pub charts: usize,
    pub failed: usize,
    pub single_f1: f64,
    pub ensemble_f1: f64,
    pub convergence_rate: f64,
    pub mean_samples: f64,
    pub spearman_u_f1: Option<f64>,
    pub breakdown: ErrorBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub rows: Vec<SimulateRow>,
    pub charts: Vec<ChartScore>,
}

impl SimulateReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "strategy\tcharts\tfailed\tsingle_f1\tensemble_f1\tgain\tconvergence_rate\tmean_samples\tspearman_u_f1\tvalue_err\tlabel_err\tmissing\textra\n",
        );
        for r in &self.rows {
            let b = &r.breakdown;
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.4}\t{:.2}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\n",
                r.strategy,
                r.charts,
                r.failed,
                r.single_f1,
                r.ensemble_f1,
                r.ensemble_f1 - r.single_f1,
                r.convergence_rate,
                r.mean_samples,
                r.spearman_u_f1.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}")),
                b.value_err,
                b.label_err,
                b.missing,
                b.extra,
            ));
        }
        out
    }
}

/// Mean F1 of each draw of a run taken on its own.
pub fn single_sample_f1(result: &EnsembleResult, truth: &[Triple], metric: &MetricConfig) -> f64 {
    let mut tables = result.raw_samples.iter();
    let total: f64 = result
        .samples
        .iter()
        .map(|s| match s.status {
            SampleStatus::Parsed => {
                let t = tables.next().expect("one table per parsed draw");
                rms_scores(&to_triples(t), truth, metric).f1
            }
            _ => 0.0,
        })
        .sum();
    if result.samples.is_empty() {
        0.0
    } else {
        total / result.samples.len() as f64
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Runs simulated ensembles over `truths` for every strategy, `repeats` times with
/// distinct noise seeds, and reports one row per strategy.
pub fn simulate(
    truths: &[(String, NormalizedTable)],
    cfg: &RunConfig,
    strategies: &[Strategy],
    repeats: usize,
) -> Result<SimulateReport> {
    let mut cfg = cfg.clone();
    cfg.sampler_kind = SamplerKind::Simulated;
    cfg.validate()?;
    let items: Vec<CorpusItem> = truths
        .iter()
        .map(|(id, t)| CorpusItem::from_truth(id.clone(), t.clone()))
        .collect();

    let mut rows = Vec::new();
    let mut charts = Vec::new();
    for &strategy in strategies {
        let mut failed = 0;
        let mut scores = Vec::new();
        for repeat in 0..repeats.max(1) {
            let mut run_cfg = cfg.clone();
            run_cfg.ensemble.strategy = strategy;
            run_cfg.noise.seed = cfg.noise.seed.wrapping_add(repeat as u64);
            for outcome in run_corpus(&items, &run_cfg) {
                let truth = to_triples(outcome.truth.as_ref().expect("simulated items carry truth"));
                let Ok(r) = outcome.result else {
                    failed += 1;
                    continue;
                };
                let pred = to_triples(&r.table);
                scores.push(ChartScore {
                    id: outcome.id,
                    strategy,
                    repeat,
                    ensemble_f1: outcome.f1.unwrap_or(0.0),
                    single_f1: single_sample_f1(&r, &truth, &cfg.metric),
                    samples_used: r.convergence.samples_used,
                    converged: r.convergence.converged,
                    converged_at: r.convergence.converged_at,
                    u_mean: r.uncertainty.u_mean,
                    breakdown: error_breakdown(&pred, &truth, &cfg.metric),
                });
            }
        }
        let (u, f): (Vec<f64>, Vec<f64>) = scores
            .iter()
            .filter_map(|c| c.u_mean.map(|u| (u, c.ensemble_f1)))
            .unzip();
        let breakdowns: Vec<ErrorBreakdown> = scores.iter().map(|c| c.breakdown).collect();
        rows.push(SimulateRow {
            strategy,
            charts: scores.len(),
            failed,
            single_f1: mean(scores.iter().map(|c| c.single_f1)),
            ensemble_f1: mean(scores.iter().map(|c| c.ensemble_f1)),
            convergence_rate: mean(scores.iter().map(|c| f64::from(u8::from(c.converged)))),
            mean_samples: mean(scores.iter().map(|c| c.samples_used as f64)),
            spearman_u_f1: spearman(&u, &f),
            breakdown: ErrorBreakdown::mean(&breakdowns).unwrap_or_default(),
        });
        charts.extend(scores);
    }
    Ok(SimulateReport { rows, charts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{synth_corpus, SynthParams};
    use crate::sampler::NoiseModel;

    #[test]
    fn identity_noise_is_exact_and_fast() {
        let truths = synth_corpus(&SynthParams { n_charts: 6, ..Default::default() });
        let cfg = RunConfig { noise: NoiseModel::identity(3), ..Default::default() };
        let rep = simulate(&truths, &cfg, &[Strategy::Median, Strategy::Mean], 1).unwrap();
        assert_eq!(rep.rows.len(), 2);
        for row in &rep.rows {
            assert_eq!(row.ensemble_f1, 100.0);
            assert_eq!(row.single_f1, 100.0);
            assert_eq!(row.mean_samples, 4.0);
            assert_eq!(row.convergence_rate, 1.0);
        }
        assert!(rep.charts.iter().all(|c| c.converged_at == Some(4)));
    }

    #[test]
    fn repeats_use_fresh_noise() {
        let truths = synth_corpus(&SynthParams { n_charts: 2, ..Default::default() });
        let cfg = RunConfig {
            noise: NoiseModel { value_noise_rel: 0.05, ..NoiseModel::identity(1) },
            ..Default::default()
        };
        let rep = simulate(&truths, &cfg, &[Strategy::Median], 2).unwrap();
        assert_eq!(rep.charts.len(), 4);
        assert_ne!(rep.charts[0].single_f1, rep.charts[2].single_f1);
        assert_eq!(rep.to_tsv().lines().count(), 2);
    }
}
