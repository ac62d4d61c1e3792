use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_file, write_json, HarnessError, Result, RunConfig};
use crate::ensemble::{replay, ConvergenceState, EnsembleResult, SampleLog, SampleStatus, UncertaintySummary};
use crate::sampler::vlm::Usage;
use crate::table::AggregatedTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "error", rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed(String),
}

/// Everything needed to audit and replay one entry's extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub status: RecordStatus,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub config: RunConfig,
    pub config_hash: String,
    pub samples: Vec<SampleLog>,
    pub table: Option<AggregatedTable>,
    pub uncertainty: Option<UncertaintySummary>,
    pub convergence: Option<ConvergenceState>,
    /// RMS F1 against ground truth, when the truth was available at extraction time.
    pub f1: Option<f64>,
    pub wall_time_secs: f64,
    pub usage: Usage,
}

impl RunRecord {
    /// Stored draws in order; recorded sampler failures come back as `Err`.
    pub fn draws(&self) -> Vec<Result<String, String>> {
        self.samples
            .iter()
            .map(|s| match &s.status {
                SampleStatus::SamplerFailed(reason) => Err(reason.clone()),
                _ => Ok(s.text.clone().unwrap_or_default()),
            })
            .collect()
    }

    /// Re-aggregates the stored draws under the recorded ensemble config.
    pub fn replay(&self) -> Result<EnsembleResult> {
        Ok(replay(&self.draws(), &self.config.ensemble)?)
    }

    pub fn samples_used(&self) -> usize {
        self.convergence.as_ref().map_or(self.samples.len(), |c| c.samples_used)
    }
}

const SUMMARY_HEADER: &str = "id\tstatus\tsamples_used\tconverged\tconverged_at\tu_med\tu_mean\tu_max\tf1\twall_time_secs\trequests";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub(crate) fn summary_tsv(records: &[RunRecord]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in records {
        let status = match &r.status {
            RecordStatus::Ok => "ok",
            RecordStatus::Failed(_) => "failed",
        };
        let conv = r.convergence.as_ref();
        let u = r.uncertainty.as_ref();
        let line = [
            r.id.clone(),
            status.to_string(),
            r.samples_used().to_string(),
            opt(conv.map(|c| c.converged)),
            opt(conv.and_then(|c| c.converged_at)),
            opt(u.and_then(|u| u.u_med)),
            opt(u.and_then(|u| u.u_mean)),
            opt(u.and_then(|u| u.u_max)),
            opt(r.f1.map(|f| format!("{f:.2}"))),
            format!("{:.3}", r.wall_time_secs),
            r.usage.requests.to_string(),
        ];
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    out
}

/// Writes `config.json`, `summary.tsv` and one directory per record holding
/// `samples/NNN.txt`, `table.tsv`, `uncertainty.tsv` and `record.json`.
pub fn write_run_dir(dir: &Path, config: &RunConfig, records: &[RunRecord]) -> Result<()> {
    write_json(&dir.join("config.json"), config)?;
    for r in records {
        let entry = dir.join(&r.id);
        for s in &r.samples {
            let (name, body) = match &s.status {
                SampleStatus::SamplerFailed(reason) => (format!("{:03}.err", s.draw_index), reason.clone()),
                _ => (format!("{:03}.txt", s.draw_index), s.text.clone().unwrap_or_default()),
            };
            write_file(&entry.join("samples").join(name), body)?;
        }
        if let Some(t) = &r.table {
            write_file(&entry.join("table.tsv"), t.to_tsv())?;
            write_file(&entry.join("uncertainty.tsv"), t.uncertainty_tsv())?;
        }
        write_json(&entry.join("record.json"), r)?;
    }
    write_file(&dir.join("summary.tsv"), summary_tsv(records))
}

/// Loads every `*/record.json` under `dir`, sorted by id.
pub fn load_run_dir(dir: &Path) -> Result<Vec<RunRecord>> {
    let read_dir = std::fs::read_dir(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for item in read_dir {
        let item = item.map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = item.path().join("record.json");
        if path.is_file() {
            records.push(read_json::<RunRecord>(&path)?);
        }
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}
