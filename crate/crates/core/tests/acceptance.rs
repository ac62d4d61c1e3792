//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails. Run with `cargo test --test acceptance`.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use chartens::assignment;
use chartens::harness::synth::{synth_corpus, SynthParams};
use chartens::harness::{
    load_run_dir, run_corpus, simulate, sweep_stored, write_run_dir, CorpusItem, RunConfig, RunRecord, SweepAxis,
};
use chartens::metrics::{
    entry_similarity, error_breakdown, key_distance, rd, rms_scores, rnss, spearman, to_triples, value_distance,
};
use chartens::{run_ensemble, AggregatedTable, MetricConfig, NoiseModel, NormalizedTable, SimulatedSampler, Strategy, Triple};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// Exhaustive minimum over injections of the smaller side into the larger one.
fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return 0.0;
    }
    if n > m {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        return brute_force_min(&t);
    }
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; m], 0.0, &mut best);
    best
}

fn random_triples(rng: &mut ChaCha8Rng, max: usize) -> Vec<Triple> {
    const ROWS: [&str; 6] = ["2019", "2020", "2021", "north", "south", "total"];
    const COLS: [&str; 5] = ["France", "Frace", "Spain", "GDP", "gdp %"];
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| {
            Triple::new(
                ROWS[rng.random_range(0..ROWS.len())],
                COLS[rng.random_range(0..COLS.len())],
                rng.random_range(1.0..100.0),
            )
        })
        .collect()
}

fn matching_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = MetricConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let p = random_triples(&mut rng, 6);
        let t = random_triples(&mut rng, 6);
        let cost: Vec<Vec<f64>> = p
            .iter()
            .map(|a| t.iter().map(|b| key_distance(a, b, &cfg)).collect())
            .collect();
        let got = assignment::solve(&cost).cost;
        worst = worst.max((got - brute_force_min(&cost)).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("max |hungarian - exhaustive| = {worst:.2e} over 500 sets in {:.2}s", elapsed.as_secs_f64()),
    )
}

fn random_table(rng: &mut ChaCha8Rng, index: usize) -> NormalizedTable {
    let rows = rng.random_range(1..=8);
    let cols = rng.random_range(1..=4);
    NormalizedTable::new(
        (0..rows).map(|i| format!("{}", 1980 + i)).collect(),
        (0..cols).map(|j| format!("series {index}-{j}")).collect(),
        (0..rows)
            .map(|_| (0..cols).map(|_| Some(rng.random_range(-1e4..1e4))).collect())
            .collect(),
        0,
    )
    .expect("rectangular table")
}

fn metric_identities() -> Outcome {
    let cfg = MetricConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = Vec::new();
    for i in 0..200 {
        let t = random_table(&mut rng, i);
        let truth = to_triples(&t);
        let values: Vec<f64> = truth.iter().map(|x| x.value).collect();
        let checks = [
            rms_scores(&truth, &truth, &cfg).f1 == 100.0,
            rms_scores(&to_triples(&t.transpose()), &truth, &cfg).f1 == 100.0,
            rnss(&values, &values) == 1.0,
            rd(&values, &values) == Ok(0.0),
        ];
        if checks.iter().any(|ok| !ok) {
            bad.push(i);
        }
    }
    outcome(bad.is_empty(), format!("200 tables, failing: {bad:?}"))
}

fn hand_values() -> Outcome {
    let cfg = MetricConfig::default();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    check("value distance 105 vs 100", close(value_distance(105.0, 100.0, &cfg), 0.05, 1e-12));
    check("value distance 115 vs 100", value_distance(115.0, 100.0, &cfg) == 1.0);
    // "abc|x" vs "abd|x": one edit over five characters.
    let sim = entry_similarity(&Triple::new("abd", "x", 105.0), &Triple::new("abc", "x", 100.0), &cfg);
    check("entry similarity 0.76", close(sim, 0.76, 1e-12));

    let truth = vec![Triple::new("a", "x", 100.0)];
    let pred = vec![Triple::new("a", "x", 100.0), Triple::new("b", "y", 5.0)];
    let s = rms_scores(&pred, &truth, &cfg);
    check(
        "rms 50/100/66.67",
        close(s.precision, 50.0, 1e-9) && close(s.recall, 100.0, 1e-9) && close(s.f1, 200.0 / 3.0, 1e-9),
    );

    check("rnss {100,50} vs {100} = 0.5", rnss(&[100.0, 50.0], &[100.0]) == 0.5);
    check("rnss {} vs {100} = 0", rnss(&[], &[100.0]) == 0.0);

    let truth = vec![Triple::new("alpha", "x", 1.0), Triple::new("omega", "x", 2.0)];
    let b = error_breakdown(&[Triple::new("alpha", "x", 1.0)], &truth, &cfg);
    check(
        "breakdown one missing",
        close(b.correct, 200.0 / 3.0, 1e-9)
            && close(b.missing, 100.0 / 3.0, 1e-9)
            && b.value_err == 0.0
            && b.label_err == 0.0
            && b.extra == 0.0,
    );
    let b = error_breakdown(&[], &truth, &cfg);
    check(
        "breakdown empty prediction",
        (b.correct, b.value_err, b.label_err, b.missing, b.extra) == (0.0, 0.0, 0.0, 100.0, 0.0),
    );

    outcome(failures.is_empty(), format!("8 hand-computed values, failing: {failures:?}"))
}

fn corpus(n: usize, seed: u64) -> Vec<(String, NormalizedTable)> {
    synth_corpus(&SynthParams { n_charts: n, rows: 10, cols: 3, seed })
}

fn end_to_end_identity() -> Outcome {
    let cfg = RunConfig { noise: NoiseModel::identity(5), ..Default::default() };
    let rep = match simulate(&corpus(100, 5), &cfg, &[Strategy::Median], 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let exact = rep.charts.iter().filter(|c| c.ensemble_f1 == 100.0).count();
    let at4 = rep.charts.iter().filter(|c| c.converged_at == Some(4) && c.samples_used == 4).count();
    outcome(
        rep.charts.len() == 100 && exact == 100 && at4 == 100,
        format!("{exact}/100 with F1 = 100, {at4}/100 converged at 4 samples"),
    )
}

fn gain_noise(seed: u64) -> NoiseModel {
    NoiseModel {
        value_noise_rel: 0.08,
        p_drop_row: 0.1,
        p_label_typo: 0.1,
        p_extra_row: 0.1,
        ..NoiseModel::identity(seed)
    }
}

fn gain_config() -> RunConfig {
    let mut cfg = RunConfig { noise: gain_noise(2024), ..Default::default() };
    cfg.ensemble.k_max = 15;
    cfg
}

fn ensemble_gain() -> Outcome {
    let start = Instant::now();
    let rep = match simulate(&corpus(200, 2024), &gain_config(), &[Strategy::Median], 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let row = &rep.rows[0];
    let gain = row.ensemble_f1 - row.single_f1;
    outcome(
        gain >= 3.0 && row.charts == 200 && elapsed < Duration::from_secs(120),
        format!(
            "median ensemble F1 {:.2} vs single-sample {:.2} (gain {gain:.2}) over {} charts in {:.1}s",
            row.ensemble_f1,
            row.single_f1,
            row.charts,
            elapsed.as_secs_f64()
        ),
    )
}

fn aggregator_ordering() -> Outcome {
    let mut cfg = gain_config();
    cfg.noise.p_outlier = 0.1;
    cfg.noise.outlier_scale = 10.0;
    let rep = match simulate(&corpus(200, 2024), &cfg, &[Strategy::Median, Strategy::Mean], 1) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (median, mean) = (rep.rows[0].ensemble_f1, rep.rows[1].ensemble_f1);
    outcome(median >= mean, format!("median F1 {median:.2} vs mean F1 {mean:.2} with 10% x10 outliers"))
}

// Fixed-budget records, so stricter convergence settings have draws to consume.
fn fixed_budget_records(n: usize, seed: u64) -> (Vec<RunRecord>, HashMap<String, NormalizedTable>, RunConfig) {
    let mut cfg = RunConfig {
        noise: NoiseModel { value_noise_rel: 0.01, p_label_typo: 0.05, ..NoiseModel::identity(seed) },
        ..Default::default()
    };
    cfg.ensemble.early_stopping = false;
    cfg.ensemble.k_max = 20;
    let truths = corpus(n, seed);
    let items: Vec<CorpusItem> = truths.iter().map(|(id, t)| CorpusItem::from_truth(id.clone(), t.clone())).collect();
    let hash = cfg.hash();
    let records = run_corpus(&items, &cfg).into_iter().map(|o| o.into_record(&cfg, &hash)).collect();
    (records, truths.into_iter().collect(), cfg)
}

fn convergence_monotonicity() -> Outcome {
    let (records, truths, cfg) = fixed_budget_records(60, 99);
    let sweep = |axis, values: &[f64]| -> Result<Vec<f64>, String> {
        let rows = sweep_stored(&records, &truths, &cfg.ensemble, &cfg.metric, axis, values, 0)
            .map_err(|e| e.to_string())?;
        Ok(rows.iter().map(|r| r.mean_samples).collect())
    };
    let (tol, pat) = match (sweep(SweepAxis::Tolerance, &[0.001, 0.01, 0.1]), sweep(SweepAxis::Patience, &[1.0, 2.0, 3.0])) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let non_increasing = tol.windows(2).all(|w| w[1] <= w[0]);
    let non_decreasing = pat.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        non_increasing && non_decreasing,
        format!("tolerance 0.1%/1%/10% -> S {tol:.2?}; patience 1/2/3 -> S {pat:.2?}"),
    )
}

fn uncertainty_anticorrelation() -> Outcome {
    let start = Instant::now();
    let truths = corpus(200, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let sigmas: Vec<f64> = (0..truths.len()).map(|_| rng.random_range(1..=20) as f64 / 100.0).collect();
    let cfg = RunConfig::default();
    let pairs: Vec<Option<(f64, f64)>> = truths
        .par_iter()
        .zip(&sigmas)
        .enumerate()
        .map(|(i, ((_, truth), &sigma))| {
            let noise = NoiseModel { value_noise_rel: sigma, ..NoiseModel::identity(1000 + i as u64) };
            let r = run_ensemble(&SimulatedSampler::new(truth.clone(), noise), &cfg.ensemble).ok()?;
            let f1 = rms_scores(&to_triples(&r.table), &to_triples(truth), &cfg.metric).f1;
            Some((r.uncertainty.u_mean?, f1))
        })
        .collect();
    let (u, f): (Vec<f64>, Vec<f64>) = pairs.into_iter().flatten().unzip();
    let rho = spearman(&u, &f);
    let elapsed = start.elapsed();
    outcome(
        rho.is_some_and(|r| r < -0.3) && elapsed < Duration::from_secs(120),
        format!("spearman(U_mean, F1) = {rho:.3?} over {} charts in {:.1}s", u.len(), elapsed.as_secs_f64()),
    )
}

fn pruning_efficacy() -> Outcome {
    let mut extra = Vec::new();
    for prune in [0.0, 0.2] {
        let mut cfg = gain_config();
        cfg.noise.p_extra_row = 0.15;
        cfg.ensemble.align.prune_fraction = prune;
        match simulate(&corpus(200, 2024), &cfg, &[Strategy::Median], 1) {
            Ok(rep) => extra.push(rep.rows[0].breakdown.extra),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        extra[1] < extra[0],
        format!("Extra mass {:.3} at prune 0.2 vs {:.3} at prune 0.0", extra[1], extra[0]),
    )
}

type CellBits = (Option<u64>, usize, Option<u64>);

fn bits(t: &AggregatedTable) -> (Vec<String>, Vec<String>, Vec<CellBits>) {
    let cells = t
        .cells
        .iter()
        .flatten()
        .map(|c| (c.value.map(f64::to_bits), c.support, c.uncertainty.map(f64::to_bits)))
        .collect();
    (t.row_labels.clone(), t.col_labels.clone(), cells)
}

fn replay_determinism() -> Outcome {
    let truths = corpus(40, 77);
    let mut cfg = RunConfig { noise: gain_noise(77), ..Default::default() };
    cfg.noise.p_outlier = 0.05;
    let items: Vec<CorpusItem> = truths.iter().map(|(id, t)| CorpusItem::from_truth(id.clone(), t.clone())).collect();
    let hash = cfg.hash();
    let records: Vec<RunRecord> = run_corpus(&items, &cfg).into_iter().map(|o| o.into_record(&cfg, &hash)).collect();

    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let loaded = match write_run_dir(dir.path(), &cfg, &records).and_then(|_| load_run_dir(dir.path())) {
        Ok(l) => l,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut checked = 0;
    let mut mismatched = Vec::new();
    for rec in records.iter().chain(&loaded) {
        let Some(stored) = &rec.table else { continue };
        checked += 1;
        match rec.replay() {
            Ok(r) if bits(&r.table) == bits(stored) => {}
            _ => mismatched.push(rec.id.clone()),
        }
    }
    outcome(
        mismatched.is_empty() && checked == 2 * records.len() && loaded.len() == records.len(),
        format!("{checked} stored tables replayed (in memory and from disk), mismatched: {mismatched:?}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("matching oracle", matching_oracle),
        ("metric identities", metric_identities),
        ("hand-checked metric values", hand_values),
        ("end-to-end identity", end_to_end_identity),
        ("ensemble gain", ensemble_gain),
        ("aggregator ordering", aggregator_ordering),
        ("convergence monotonicity", convergence_monotonicity),
        ("uncertainty anti-correlation", uncertainty_anticorrelation),
        ("pruning efficacy", pruning_efficacy),
        ("replay determinism", replay_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
