use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use chartens::ensemble::Strategy;
use chartens::harness::benchgen::{self, BenchgenParams};
use chartens::harness::synth::synth_corpus;
use chartens::harness::{
    evaluate, extract, load_run_dir, rows_to_tsv, simulate, sweep, sweep_stored, CorpusItem, DatasetIndex,
    PredictionSource, RunConfig, SamplerKind, SweepAxis,
};
use chartens::table::NormalizedTable;

#[derive(Parser)]
#[command(name = "chartens", version, about = "Self-ensembling chart-to-table extraction")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Cmd,
}

/// Flags accepted by every subcommand; they override the config file.
#[derive(Args)]
struct Shared {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    k_max: Option<usize>,
    #[arg(long, global = true)]
    patience: Option<usize>,
    #[arg(long, global = true)]
    coverage: Option<f64>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Minimum cluster support as a fraction of sampled tables.
    #[arg(long, global = true)]
    prune_threshold: Option<f64>,
    #[arg(long, global = true)]
    cluster_tau: Option<f64>,
    /// Always draw k-max samples (convergence is still recorded).
    #[arg(long, global = true)]
    no_early_stopping: bool,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// simulated or vlm.
    #[arg(long, global = true)]
    sampler: Option<SamplerKind>,
    #[arg(long, global = true)]
    key_tau: Option<f64>,
    #[arg(long, global = true)]
    value_theta: Option<f64>,
}

/// Noise model overrides for the simulated sampler.
#[derive(Args, Default)]
struct NoiseFlags {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p_drop_row: Option<f64>,
    #[arg(long)]
    p_drop_col: Option<f64>,
    #[arg(long)]
    p_extra_row: Option<f64>,
    #[arg(long)]
    p_label_typo: Option<f64>,
    #[arg(long)]
    p_transpose: Option<f64>,
    #[arg(long)]
    p_cell_blank: Option<f64>,
    #[arg(long)]
    p_ragged: Option<f64>,
    #[arg(long)]
    p_outlier: Option<f64>,
}

/// Where simulated truths come from: a dataset index or the synthetic generator.
#[derive(Args)]
struct CorpusFlags {
    #[arg(long)]
    index: Option<PathBuf>,
    /// Synthetic corpus size when no index is given.
    #[arg(long)]
    charts: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the ensemble over every entry of a dataset index and write a run directory.
    Extract {
        #[arg(long)]
        index: PathBuf,
        #[command(flatten)]
        noise: NoiseFlags,
    },
    /// Score predictions (a directory of <id>.tsv or a run directory) against truth.
    Evaluate {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, conflicts_with = "run_dir", required_unless_present = "run_dir")]
        predictions: Option<PathBuf>,
        #[arg(long)]
        run_dir: Option<PathBuf>,
        /// Metadata key to group by; repeatable.
        #[arg(long)]
        group_by: Vec<String>,
    },
    /// Simulated ensembles: single-sample vs ensemble F1, convergence and uncertainty.
    Simulate {
        #[command(flatten)]
        corpus: CorpusFlags,
        #[command(flatten)]
        noise: NoiseFlags,
        /// Comma-separated strategies; defaults to the configured one.
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
        strategies: Vec<Strategy>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Vary one setting and report F1, mean samples and convergence rate per value.
    Sweep {
        /// patience, coverage, tolerance, prune, k or temperature.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Re-aggregate the stored samples of this run instead of sampling again.
        #[arg(long)]
        run_dir: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusFlags,
        #[command(flatten)]
        noise: NoiseFlags,
    },
    /// Build benchmark truth tables, a renderer spec and a dataset index from indicator data.
    Benchgen {
        /// CSV with columns indicator,country,year,value.
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value_t = 16)]
        charts: usize,
        /// Draw chart type and backend i.i.d. instead of exact balancing.
        #[arg(long)]
        iid: bool,
        /// Renderer command to run on the spec, e.g. "python -m chart_render".
        #[arg(long)]
        render: Option<String>,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

/// Config file (or `fallback`, or defaults) with command-line flags layered on top.
fn build_config(sh: &Shared, noise: Option<&NoiseFlags>, fallback: Option<&Path>) -> Result<RunConfig> {
    let mut c = match (&sh.config, fallback) {
        (Some(p), _) => RunConfig::from_path(p)?,
        (None, Some(p)) => RunConfig::from_path(p)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(s) = sh.seed {
        c.set_seed(s);
    }
    macro_rules! set {
        ($($flag:expr => $field:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { $field = v; })*
        };
    }
    set!(
        sh.jobs => c.jobs,
        sh.strategy => c.ensemble.strategy,
        sh.k_max => c.ensemble.k_max,
        sh.patience => c.ensemble.patience,
        sh.coverage => c.ensemble.coverage,
        sh.tolerance => c.ensemble.tolerance,
        sh.prune_threshold => c.ensemble.align.prune_fraction,
        sh.cluster_tau => c.ensemble.align.cluster_tau,
        sh.temperature => c.sampler.temperature,
        sh.endpoint => c.sampler.endpoint_url,
        sh.model => c.sampler.model_id,
        sh.sampler => c.sampler_kind,
        sh.key_tau => c.metric.key_tau,
        sh.value_theta => c.metric.value_theta,
    );
    if sh.no_early_stopping {
        c.ensemble.early_stopping = false;
    }
    if let Some(n) = noise {
        set!(
            n.sigma => c.noise.value_noise_rel,
            n.p_drop_row => c.noise.p_drop_row,
            n.p_drop_col => c.noise.p_drop_col,
            n.p_extra_row => c.noise.p_extra_row,
            n.p_label_typo => c.noise.p_label_typo,
            n.p_transpose => c.noise.p_transpose,
            n.p_cell_blank => c.noise.p_cell_blank,
            n.p_ragged => c.noise.p_ragged,
            n.p_outlier => c.noise.p_outlier,
        );
    }
    c.validate()?;
    Ok(c)
}

fn load_truths(corpus: &CorpusFlags, cfg: &mut RunConfig) -> Result<Vec<(String, NormalizedTable)>> {
    if let Some(path) = &corpus.index {
        let index = DatasetIndex::load(path)?;
        return index
            .entries
            .iter()
            .map(|e| Ok((e.id.clone(), e.load_truth()?)))
            .collect();
    }
    if let Some(n) = corpus.charts {
        cfg.synth.n_charts = n;
    }
    if let Some(r) = corpus.rows {
        cfg.synth.rows = r;
    }
    if let Some(c) = corpus.cols {
        cfg.synth.cols = c;
    }
    cfg.validate()?;
    Ok(synth_corpus(&cfg.synth))
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let sh = &cli.shared;
    let out = sh.out.as_deref();
    match &cli.command {
        Cmd::Extract { index, noise } => {
            let cfg = build_config(sh, Some(noise), None)?;
            let Some(out) = out else {
                bail!("extract needs --out");
            };
            let index = DatasetIndex::load(index)?;
            let outcome = extract(&index, &cfg, Some(out))?;
            println!("{}", outcome.summary.line());
            if outcome.summary.failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Evaluate {
            index,
            predictions,
            run_dir,
            group_by,
        } => {
            let cfg = build_config(sh, None, None)?;
            let index = DatasetIndex::load(index)?;
            let source = match (predictions, run_dir) {
                (Some(p), _) => PredictionSource::Dir(p.clone()),
                (None, Some(r)) => PredictionSource::RunDir(r.clone()),
                (None, None) => bail!("give --predictions or --run-dir"),
            };
            let outcome = evaluate(&index, &source, &cfg.metric, group_by)?;
            emit(out, "report.tsv", &outcome.report.to_tsv())?;
            if let Some(dir) = out {
                std::fs::write(dir.join("report.json"), outcome.report.to_json())?;
            }
            if !outcome.errors.is_empty() {
                for (id, e) in &outcome.errors {
                    eprintln!("{id}: {e}");
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Simulate {
            corpus,
            noise,
            strategies,
            repeats,
        } => {
            let mut cfg = build_config(sh, Some(noise), None)?;
            let truths = load_truths(corpus, &mut cfg)?;
            let strategies = if strategies.is_empty() {
                vec![cfg.ensemble.strategy]
            } else {
                strategies.clone()
            };
            let report = simulate(&truths, &cfg, &strategies, *repeats)?;
            emit(out, "simulate.tsv", &report.to_tsv())?;
            if let Some(dir) = out {
                std::fs::write(dir.join("simulate.json"), serde_json::to_string_pretty(&report)?)?;
            }
        }
        Cmd::Sweep {
            axis,
            values,
            run_dir,
            corpus,
            noise,
        } => {
            let axis: SweepAxis = axis.parse()?;
            let rows = if let Some(dir) = run_dir {
                let base = build_config(sh, None, Some(&dir.join("config.json")))?;
                let records = load_run_dir(dir)?;
                let truths: HashMap<String, NormalizedTable> = match &corpus.index {
                    Some(p) => DatasetIndex::load(p)?
                        .entries
                        .iter()
                        .filter_map(|e| e.load_truth().ok().map(|t| (e.id.clone(), t)))
                        .collect(),
                    None => HashMap::new(),
                };
                sweep_stored(&records, &truths, &base.ensemble, &base.metric, axis, values, base.jobs)?
            } else {
                let mut cfg = build_config(sh, Some(noise), None)?;
                let items: Vec<CorpusItem> = match (&corpus.index, cfg.sampler_kind) {
                    (Some(p), SamplerKind::Vlm) => DatasetIndex::load(p)?
                        .entries
                        .iter()
                        .map(|e| CorpusItem {
                            id: e.id.clone(),
                            metadata: e.metadata.clone(),
                            truth: e.load_truth().ok(),
                            image_path: e.image_path.clone(),
                        })
                        .collect(),
                    _ => load_truths(corpus, &mut cfg)?
                        .into_iter()
                        .map(|(id, t)| CorpusItem::from_truth(id, t))
                        .collect(),
                };
                sweep(&items, &cfg, axis, values)?
            };
            emit(out, "sweep.tsv", &rows_to_tsv(axis, &rows))?;
        }
        Cmd::Benchgen {
            source,
            charts,
            iid,
            render,
        } => {
            let Some(out) = out else {
                bail!("benchgen needs --out");
            };
            let params = BenchgenParams {
                n_charts: *charts,
                seed: sh.seed.unwrap_or(0),
                balanced: !iid,
                ..Default::default()
            };
            let mut output = benchgen::benchgen(source, &params, out)?;
            println!(
                "wrote {} charts: {}, {}",
                output.spec.charts.len(),
                output.spec_path.display(),
                output.index_path.display()
            );
            if let Some(cmd) = render {
                let failed = benchgen::render(cmd, &mut output, sh.jobs.unwrap_or(1))?;
                if !failed.is_empty() {
                    eprintln!("{} charts failed to render", failed.len());
                    return Ok(ExitCode::FAILURE);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
