//! Batch runner and experiment harness: configuration files, dataset indices, run
//! records on disk, and the extract / evaluate / simulate / sweep / benchgen commands.

pub mod benchgen;
mod config;
mod dataset;
mod evaluate;
mod extract;
mod record;
mod simulate;
mod sweep;
pub mod synth;

use std::path::{Path, PathBuf};

pub use config::{entry_seed, RunConfig, SamplerKind};
pub use dataset::{DatasetIndex, IndexEntry};
pub use evaluate::{evaluate, EvaluateOutcome, PredictionSource};
pub use extract::{extract, run_corpus, ChartOutcome, CorpusItem, ExtractOutcome, ExtractSummary};
pub use record::{load_run_dir, write_run_dir, RecordStatus, RunRecord};
pub use simulate::{simulate, SimulateReport, SimulateRow};
pub use sweep::{rows_to_tsv, sweep, sweep_stored, SweepAxis, SweepRow};

use crate::ensemble::EnsembleError;
use crate::ingest::IngestError;
use crate::metrics::ReportError;
use crate::sampler::SamplerError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("duplicate dataset id {0:?}")]
    DuplicateId(String),
    #[error("invalid dataset id {0:?}")]
    InvalidId(String),
    #[error("entry {0:?} has no readable ground truth")]
    MissingTruth(String),
    #[error("entry {0:?} has no image path")]
    MissingImage(String),
    #[error("unknown sweep axis {0:?}")]
    UnknownAxis(String),
    #[error("insufficient usable series: built {built} of {requested} charts")]
    InsufficientSeries { requested: usize, built: usize },
    #[error("renderer failed: {0}")]
    Render(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("harness types serialize");
    text.push('\n');
    write_file(path, text)
}

/// Runs `f` on a pool of `jobs` threads (0 = one per core).
pub(crate) fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("cannot build a {jobs}-thread pool ({e}); using the global pool");
            f()
        }
    }
}
