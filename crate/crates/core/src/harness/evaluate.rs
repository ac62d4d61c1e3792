use std::collections::HashMap;
use std::path::PathBuf;

use super::{load_run_dir, DatasetIndex, RecordStatus, Result, RunRecord};
use crate::ingest::ingest;
use crate::metrics::{corpus_report, to_triples, CorpusReport, ExampleInput, MetricConfig, RunStats, Triple};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionSource {
    /// A directory of `<id>.tsv` files (raw replies or canonical TSV).
    Dir(PathBuf),
    /// A run directory written by `extract`.
    RunDir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: CorpusReport,
    /// Entries scored as empty predictions, with the reason.
    pub warnings: Vec<String>,
    /// Entries left out of the report (id, error).
    pub errors: Vec<(String, String)>,
}

enum Predictions {
    Dir(PathBuf),
    Records(HashMap<String, RunRecord>),
}

impl Predictions {
    fn lookup(&self, id: &str) -> Result<(Vec<Triple>, Option<RunStats>), String> {
        match self {
            Predictions::Dir(dir) => {
                let path = dir.join(format!("{id}.tsv"));
                let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let table = ingest(&text, 0).map_err(|e| format!("{}: {e}", path.display()))?;
                Ok((to_triples(&table), None))
            }
            Predictions::Records(records) => {
                let r = records.get(id).ok_or_else(|| "no run record".to_string())?;
                let stats = r.convergence.as_ref().map(|c| RunStats {
                    samples_used: c.samples_used,
                    converged: c.converged,
                    u_mean: r.uncertainty.as_ref().and_then(|u| u.u_mean),
                });
                match (&r.status, &r.table) {
                    (RecordStatus::Ok, Some(t)) => Ok((to_triples(t), stats)),
                    (RecordStatus::Failed(e), _) => Err(format!("run failed: {e}")),
                    _ => Err("run record has no table".to_string()),
                }
            }
        }
    }
}

/// Scores predictions against the index's ground truth. A missing or unreadable
/// prediction counts as an empty table; a missing truth leaves the entry out.
pub fn evaluate(
    index: &DatasetIndex,
    source: &PredictionSource,
    metric: &MetricConfig,
    group_by: &[String],
) -> Result<EvaluateOutcome> {
    metric.validate().map_err(super::HarnessError::Config)?;
    let preds = match source {
        PredictionSource::Dir(d) => Predictions::Dir(d.clone()),
        PredictionSource::RunDir(d) => Predictions::Records(
            load_run_dir(d)?
                .into_iter()
                .map(|r| (r.id.clone(), r))
                .collect(),
        ),
    };
    let mut inputs = Vec::new();
    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    for entry in &index.entries {
        let truth = match entry.load_truth() {
            Ok(t) => t,
            Err(e) => {
                log::error!("{}: {e}", entry.id);
                errors.push((entry.id.clone(), e.to_string()));
                continue;
            }
        };
        let (pred, run) = preds.lookup(&entry.id).unwrap_or_else(|reason| {
            let msg = format!("{}: scored as empty prediction ({reason})", entry.id);
            log::warn!("{msg}");
            warnings.push(msg);
            (Vec::new(), None)
        });
        inputs.push(ExampleInput {
            id: entry.id.clone(),
            pred,
            truth: to_triples(&truth),
            metadata: entry.metadata.clone(),
            run,
        });
    }
    let report = corpus_report(&inputs, group_by, metric)?;
    Ok(EvaluateOutcome {
        report,
        warnings,
        errors,
    })
}
