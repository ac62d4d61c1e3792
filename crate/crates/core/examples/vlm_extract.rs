//! Extracts a table from a chart image through an OpenAI-compatible endpoint.
//!
//!     OPENAI_API_KEY=... cargo run --example vlm_extract -- chart.png gpt-4o-mini
//!
//! Set `CHARTENS_ENDPOINT` to target another chat-completions URL.

use chartens::{run_ensemble, EnsembleConfig, SamplerConfig};
use chartens::sampler::VlmSampler;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let (Some(image_path), Some(model)) = (args.next(), args.next()) else {
        eprintln!("usage: vlm_extract <image> <model-id>");
        return Ok(());
    };
    let mut cfg = SamplerConfig { model_id: model, min_request_interval_secs: 0.5, ..Default::default() };
    if let Ok(url) = std::env::var("CHARTENS_ENDPOINT") {
        cfg.endpoint_url = url;
    }
    let image = std::fs::read(&image_path)?;
    let sampler = VlmSampler::new(&image, cfg)?;
    let result = run_ensemble(&sampler, &EnsembleConfig::default())?;

    println!("{}", result.table.to_tsv());
    println!(
        "samples used {} (converged: {}), U_mean {:?}",
        result.convergence.samples_used, result.convergence.converged, result.uncertainty.u_mean
    );
    let usage = sampler.usage();
    println!("requests {} prompt tokens {} completion tokens {}", usage.requests, usage.prompt_tokens, usage.completion_tokens);
    Ok(())
}
