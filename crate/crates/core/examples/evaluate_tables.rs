//! Scores a flawed prediction against ground truth with RMS precision/recall/F1, RNSS,
//! RD and the error breakdown.
//!
//!     cargo run --example evaluate_tables

use chartens::ingest;
use chartens::metrics::{error_breakdown, rd, rms_match, rnss, to_triples, MetricConfig};

const TRUTH: &str = "\tFrance\tKenya\n2019\t10.5\t4\n2020\t11\t4.2\n2021\t11.8\t4.4\n";

// Transposed, one typo in a label, one value 20% off, one row missing, one extra row.
const PREDICTION: &str = "```tsv\n\t2019\t2020\tTotal\nFrance\t10.5\t13.2\t22.3\nKenia\t4\t4.2\t8.2\n```";

fn main() -> anyhow::Result<()> {
    let cfg = MetricConfig::default();
    let truth = to_triples(&ingest(TRUTH, 0)?);
    let pred = to_triples(&ingest(PREDICTION, 1)?);

    let m = rms_match(&pred, &truth, &cfg);
    println!(
        "RMS precision {:.2} recall {:.2} F1 {:.2} (keys swapped: {})",
        m.scores.precision, m.scores.recall, m.scores.f1, m.transposed
    );
    for p in &m.pairs {
        println!(
            "  {:?}/{:?} -> {:?}/{:?}  key d={:.3} value d={:.3}",
            pred[p.pred].row_key, pred[p.pred].col_key, truth[p.truth].row_key, truth[p.truth].col_key,
            p.key_distance, p.value_distance
        );
    }
    let b = error_breakdown(&pred, &truth, &cfg);
    println!(
        "correct {:.2} | value {:.2} | label {:.2} | missing {:.2} | extra {:.2}",
        b.correct, b.value_err, b.label_err, b.missing, b.extra
    );
    let pv: Vec<f64> = pred.iter().map(|t| t.value).collect();
    let tv: Vec<f64> = truth.iter().map(|t| t.value).collect();
    println!("RNSS {:.4}  RD {:.4}", rnss(&pv, &tv), rd(&pv, &tv)?);
    Ok(())
}
