use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rd, rms_match, rnss, ErrorBreakdown, MetricConfig, RmsScores, Triple};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Ensemble bookkeeping for one example, when it came from a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub samples_used: usize,
    pub converged: bool,
    pub u_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleInput {
    pub id: String,
    pub pred: Vec<Triple>,
    pub truth: Vec<Triple>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    #[serde(default)]
    pub run: Option<RunStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleScores {
    pub id: String,
    pub metadata: BTreeMap<String, String>,
    pub rms: RmsScores,
    pub transposed: bool,
    pub rnss: f64,
    /// Absent when either side has no values.
    pub rd: Option<f64>,
    pub breakdown: ErrorBreakdown,
    pub run: Option<RunStats>,
}

/// Macro averages over one slice of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    /// Metadata key, or `"all"` for the overall row.
    pub key: String,
    pub value: String,
    pub count: usize,
    pub rms: RmsScores,
    pub rnss: f64,
    pub rd: Option<f64>,
    pub breakdown: ErrorBreakdown,
    pub mean_samples: Option<f64>,
    pub convergence_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub overall: GroupRow,
    pub groups: Vec<GroupRow>,
    /// Spearman correlation between mean uncertainty and F1, when enough runs carry both.
    pub spearman_u_f1: Option<f64>,
    pub examples: Vec<ExampleScores>,
}

const MISSING_GROUP: &str = "-";

pub fn score_example(input: &ExampleInput, cfg: &MetricConfig) -> ExampleScores {
    let m = rms_match(&input.pred, &input.truth, cfg);
    let pv: Vec<f64> = input.pred.iter().map(|t| t.value).collect();
    let tv: Vec<f64> = input.truth.iter().map(|t| t.value).collect();
    ExampleScores {
        id: input.id.clone(),
        metadata: input.metadata.clone(),
        rms: m.scores,
        transposed: m.transposed,
        rnss: rnss(&pv, &tv),
        rd: rd(&pv, &tv).ok(),
        breakdown: ErrorBreakdown::from_match(&m),
        run: input.run,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn summarize(key: &str, value: &str, rows: &[&ExampleScores]) -> GroupRow {
    let m = |f: fn(&ExampleScores) -> f64| mean(rows.iter().map(|e| f(e))).unwrap_or(0.0);
    let breakdowns: Vec<ErrorBreakdown> = rows.iter().map(|e| e.breakdown).collect();
    let runs: Vec<RunStats> = rows.iter().filter_map(|e| e.run).collect();
    GroupRow {
        key: key.to_string(),
        value: value.to_string(),
        count: rows.len(),
        rms: RmsScores {
            precision: m(|e| e.rms.precision),
            recall: m(|e| e.rms.recall),
            f1: m(|e| e.rms.f1),
        },
        rnss: m(|e| e.rnss),
        rd: mean(rows.iter().filter_map(|e| e.rd)),
        breakdown: ErrorBreakdown::mean(&breakdowns).unwrap_or_default(),
        mean_samples: mean(runs.iter().map(|r| r.samples_used as f64)),
        convergence_rate: mean(runs.iter().map(|r| if r.converged { 1.0 } else { 0.0 })),
    }
}

/// Scores every example and aggregates overall and per value of each `group_by` key.
pub fn corpus_report(
    inputs: &[ExampleInput],
    group_by: &[String],
    cfg: &MetricConfig,
) -> Result<CorpusReport, ReportError> {
    if inputs.is_empty() {
        return Err(ReportError::EmptyCorpus);
    }
    let examples: Vec<ExampleScores> = inputs.par_iter().map(|i| score_example(i, cfg)).collect();
    let all: Vec<&ExampleScores> = examples.iter().collect();
    let overall = summarize("all", "all", &all);

    let mut groups = Vec::new();
    for key in group_by {
        let mut buckets: BTreeMap<&str, Vec<&ExampleScores>> = BTreeMap::new();
        for e in &examples {
            let v = e.metadata.get(key).map_or(MISSING_GROUP, String::as_str);
            buckets.entry(v).or_default().push(e);
        }
        groups.extend(buckets.iter().map(|(v, rows)| summarize(key, v, rows)));
    }

    let (u, f): (Vec<f64>, Vec<f64>) = examples
        .iter()
        .filter_map(|e| e.run.and_then(|r| r.u_mean).map(|u| (u, e.rms.f1)))
        .unzip();
    Ok(CorpusReport {
        overall,
        groups,
        spearman_u_f1: spearman(&u, &f),
        examples,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman's rho as the Pearson correlation of average ranks. `None` for fewer than two
/// points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman inputs differ in length");
    if x.len() < 2 {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.decimals$}"))
}

impl GroupRow {
    pub const TSV_HEADER: &'static str = "group_key\tgroup\tcount\tprecision\trecall\tf1\trnss\trd\tcorrect\tvalue_err\tlabel_err\tmissing\textra\tmean_samples\tconvergence_rate";

    pub fn tsv_line(&self) -> String {
        let b = &self.breakdown;
        format!(
            "{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.4}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{}\t{}",
            self.key,
            self.value,
            self.count,
            self.rms.precision,
            self.rms.recall,
            self.rms.f1,
            self.rnss,
            opt(self.rd, 4),
            b.correct,
            b.value_err,
            b.label_err,
            b.missing,
            b.extra,
            opt(self.mean_samples, 2),
            opt(self.convergence_rate, 4),
        )
    }
}

impl CorpusReport {
    /// Overall row followed by group rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(GroupRow::TSV_HEADER);
        out.push('\n');
        for row in std::iter::once(&self.overall).chain(&self.groups) {
            out.push_str(&row.tsv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
