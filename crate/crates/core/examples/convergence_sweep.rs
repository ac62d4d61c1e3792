//! Stores fixed-budget simulated runs, then re-aggregates the stored draws under
//! different tolerance, patience and budget settings without sampling again.
//!
//!     cargo run --release --example convergence_sweep

use std::collections::HashMap;

use chartens::harness::synth::{synth_corpus, SynthParams};
use chartens::harness::{extract, rows_to_tsv, sweep_stored, DatasetIndex, IndexEntry, RunConfig, SweepAxis};
use chartens::{EnsembleConfig, NoiseModel};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let truths = synth_corpus(&SynthParams { n_charts: 30, seed: 3, ..Default::default() });
    let mut entries = Vec::new();
    for (id, t) in &truths {
        let path = dir.path().join(format!("{id}.tsv"));
        std::fs::write(&path, t.to_tsv())?;
        entries.push(IndexEntry { id: id.clone(), image_path: None, truth_path: path, metadata: Default::default() });
    }
    let index = DatasetIndex { entries };

    let cfg = RunConfig {
        ensemble: EnsembleConfig { early_stopping: false, ..Default::default() },
        noise: NoiseModel { value_noise_rel: 0.02, p_drop_row: 0.05, ..NoiseModel::identity(1) },
        ..Default::default()
    };
    let run = extract(&index, &cfg, Some(&dir.path().join("run")))?;
    println!("stored runs: {}\n", run.summary.line());

    let truth_map: HashMap<_, _> = truths.into_iter().collect();
    for (axis, values) in [
        (SweepAxis::Tolerance, vec![0.001, 0.01, 0.1]),
        (SweepAxis::Patience, vec![1.0, 2.0, 3.0]),
        (SweepAxis::K, vec![3.0, 5.0, 10.0, 20.0]),
    ] {
        let rows = sweep_stored(&run.records, &truth_map, &cfg.ensemble, &cfg.metric, axis, &values, 0)?;
        println!("{}", rows_to_tsv(axis, &rows));
    }
    Ok(())
}
