use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    entry_seed, with_jobs, write_run_dir, DatasetIndex, HarnessError, RecordStatus, Result, RunConfig,
    RunRecord, SamplerKind,
};
use crate::ensemble::{run_ensemble, EnsembleResult};
use crate::metrics::{rms_scores, to_triples};
use crate::sampler::vlm::{RateLimiter, Usage, UsageCounters};
use crate::sampler::{SimulatedSampler, VlmSampler};
use crate::table::NormalizedTable;

/// One chart to run: the truth drives the simulated sampler and scoring, the image
/// drives the VLM sampler.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub id: String,
    pub metadata: BTreeMap<String, String>,
    pub truth: Option<NormalizedTable>,
    pub image_path: Option<PathBuf>,
}

impl CorpusItem {
    pub fn from_truth(id: impl Into<String>, truth: NormalizedTable) -> Self {
        Self {
            id: id.into(),
            metadata: BTreeMap::new(),
            truth: Some(truth),
            image_path: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChartOutcome {
    pub id: String,
    pub metadata: BTreeMap<String, String>,
    pub result: Result<EnsembleResult, String>,
    pub truth: Option<NormalizedTable>,
    pub f1: Option<f64>,
    pub wall_time_secs: f64,
    pub usage: Usage,
}

impl ChartOutcome {
    pub fn into_record(self, config: &RunConfig, config_hash: &str) -> RunRecord {
        let (status, samples, table, uncertainty, convergence) = match self.result {
            Ok(r) => (
                RecordStatus::Ok,
                r.samples,
                Some(r.table),
                Some(r.uncertainty),
                Some(r.convergence),
            ),
            Err(e) => (RecordStatus::Failed(e), Vec::new(), None, None, None),
        };
        RunRecord {
            id: self.id,
            status,
            metadata: self.metadata,
            config: config.clone(),
            config_hash: config_hash.to_string(),
            samples,
            table,
            uncertainty,
            convergence,
            f1: self.f1,
            wall_time_secs: self.wall_time_secs,
            usage: self.usage,
        }
    }
}

struct Shared {
    limiter: Arc<RateLimiter>,
}

fn run_item(item: &CorpusItem, cfg: &RunConfig, shared: &Shared) -> ChartOutcome {
    let start = Instant::now();
    let counters = Arc::new(UsageCounters::default());
    let result = match cfg.sampler_kind {
        SamplerKind::Simulated => match &item.truth {
            Some(truth) => {
                let noise = cfg.noise.with_seed(entry_seed(cfg.noise.seed, &item.id));
                run_ensemble(&SimulatedSampler::new(truth.clone(), noise), &cfg.ensemble).map_err(|e| e.to_string())
            }
            None => Err(HarnessError::MissingTruth(item.id.clone()).to_string()),
        },
        SamplerKind::Vlm => vlm_run(item, cfg, shared, &counters),
    };
    if let Err(e) = &result {
        log::error!("{}: {e}", item.id);
    }
    let f1 = match (&result, &item.truth) {
        (Ok(r), Some(t)) => Some(rms_scores(&to_triples(&r.table), &to_triples(t), &cfg.metric).f1),
        _ => None,
    };
    ChartOutcome {
        id: item.id.clone(),
        metadata: item.metadata.clone(),
        result,
        truth: item.truth.clone(),
        f1,
        wall_time_secs: start.elapsed().as_secs_f64(),
        usage: counters.snapshot(),
    }
}

fn vlm_run(
    item: &CorpusItem,
    cfg: &RunConfig,
    shared: &Shared,
    counters: &Arc<UsageCounters>,
) -> Result<EnsembleResult, String> {
    let path = item
        .image_path
        .as_ref()
        .ok_or_else(|| HarnessError::MissingImage(item.id.clone()).to_string())?;
    let image = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let sampler = VlmSampler::with_shared(&image, cfg.sampler.clone(), shared.limiter.clone(), counters.clone())
        .map_err(|e| e.to_string())?;
    run_ensemble(&sampler, &cfg.ensemble).map_err(|e| e.to_string())
}

/// Runs every item in parallel (up to `cfg.jobs` threads); outcomes keep input order.
pub fn run_corpus(items: &[CorpusItem], cfg: &RunConfig) -> Vec<ChartOutcome> {
    let shared = Shared {
        limiter: Arc::new(RateLimiter::new(Duration::from_secs_f64(
            cfg.sampler.min_request_interval_secs.max(0.0),
        ))),
    };
    with_jobs(cfg.jobs, || items.par_iter().map(|i| run_item(i, cfg, &shared)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub entries: usize,
    pub failed: usize,
    /// Over entries that produced a table.
    pub convergence_rate: Option<f64>,
    pub mean_samples: Option<f64>,
    pub mean_f1: Option<f64>,
    pub requests: u64,
}

impl ExtractSummary {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.status == RecordStatus::Ok).collect();
        let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        Self {
            entries: records.len(),
            failed: records.len() - ok.len(),
            convergence_rate: mean(
                ok.iter()
                    .map(|r| f64::from(u8::from(r.convergence.as_ref().is_some_and(|c| c.converged))))
                    .collect(),
            ),
            mean_samples: mean(ok.iter().map(|r| r.samples_used() as f64).collect()),
            mean_f1: mean(ok.iter().filter_map(|r| r.f1).collect()),
            requests: records.iter().map(|r| r.usage.requests).sum(),
        }
    }

    pub fn line(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{:.1}%", 100.0 * v));
        let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
        format!(
            "{} entries, {} failed, convergence rate {}, mean samples {}, mean F1 {}, requests {}",
            self.entries,
            self.failed,
            pct(self.convergence_rate),
            num(self.mean_samples),
            num(self.mean_f1),
            self.requests
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub records: Vec<RunRecord>,
    pub summary: ExtractSummary,
}

/// Runs the ensemble over every index entry and, with `out`, persists a run directory.
///
/// Entry failures are recorded, not raised; only configuration and I/O errors abort.
pub fn extract(index: &DatasetIndex, cfg: &RunConfig, out: Option<&Path>) -> Result<ExtractOutcome> {
    cfg.validate()?;
    index.validate()?;
    let items: Vec<CorpusItem> = index
        .entries
        .iter()
        .map(|e| CorpusItem {
            id: e.id.clone(),
            metadata: e.metadata.clone(),
            truth: e
                .load_truth()
                .inspect_err(|err| {
                    if cfg.sampler_kind == SamplerKind::Vlm {
                        log::info!("{}: scoring disabled ({err})", e.id);
                    }
                })
                .ok(),
            image_path: e.image_path.clone(),
        })
        .collect();
    let hash = cfg.hash();
    let records: Vec<RunRecord> = run_corpus(&items, cfg)
        .into_iter()
        .map(|o| o.into_record(cfg, &hash))
        .collect();
    let summary = ExtractSummary::from_records(&records);
    if let Some(dir) = out {
        write_run_dir(dir, cfg, &records)?;
        super::write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(ExtractOutcome { records, summary })
}
