//! Self-ensembling chart-to-table extraction.
//!
//! A chart is sampled repeatedly (from a vision-language endpoint or a seeded noise
//! oracle), each reply is parsed into a [`NormalizedTable`], labels are aligned across
//! samples, and cells are aggregated into an [`AggregatedTable`] with per-cell
//! uncertainty. Sampling stops when successive aggregates stabilize. The [`metrics`]
//! module scores tables against ground truth, and [`harness`] drives batch runs,
//! evaluation, parameter sweeps and benchmark generation.

pub mod align;
pub mod assignment;
pub mod ensemble;
pub mod ingest;
pub mod harness;
pub mod metrics;
pub mod sampler;
pub mod table;

pub use align::{AlignConfig, LabelCluster};
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleError, EnsembleResult, Strategy};
pub use ingest::{ingest, IngestError};
pub use metrics::{MetricConfig, Triple};
pub use sampler::{NoiseModel, Sampler, SamplerConfig, SamplerError, SimulatedSampler};
pub use table::{AggregatedCell, AggregatedTable, NormalizedTable, RawTable};
