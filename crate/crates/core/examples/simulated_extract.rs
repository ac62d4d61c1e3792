//! Runs the adaptive ensemble on one synthetic chart whose "model" is the seeded noise
//! oracle, then prints the consensus table, its uncertainty and the convergence trace.
//!
//!     cargo run --example simulated_extract

use chartens::harness::synth::{synth_table, SynthParams};
use chartens::metrics::{rms_scores, to_triples, MetricConfig};
use chartens::{run_ensemble, EnsembleConfig, NoiseModel, SimulatedSampler};

fn main() -> anyhow::Result<()> {
    let truth = synth_table(&SynthParams::default(), 0);
    let noise = NoiseModel {
        value_noise_rel: 0.03,
        p_drop_row: 0.1,
        p_label_typo: 0.05,
        p_extra_row: 0.1,
        p_transpose: 0.2,
        ..NoiseModel::identity(42)
    };
    let sampler = SimulatedSampler::new(truth.clone(), noise);
    let result = run_ensemble(&sampler, &EnsembleConfig::default())?;

    println!("ground truth:\n{}", truth.to_tsv());
    if let Some(first) = result.samples.first().and_then(|s| s.text.as_deref()) {
        println!("first draw:\n{first}\n");
    }
    println!("consensus after {} samples:\n{}", result.convergence.samples_used, result.table.to_tsv());
    println!("relative MAD per cell:\n{}", result.table.uncertainty_tsv());
    for u in &result.convergence.per_update_log {
        println!("k={:2} unchanged={:.3} stable={}", u.k, u.fraction_unchanged, u.stable);
    }
    println!(
        "converged={} U_med={:?} U_mean={:?} U_max={:?}",
        result.convergence.converged, result.uncertainty.u_med, result.uncertainty.u_mean, result.uncertainty.u_max
    );
    let f1 = rms_scores(&to_triples(&result.table), &to_triples(&truth), &MetricConfig::default()).f1;
    println!("RMS F1 vs truth: {f1:.2}");
    Ok(())
}
