use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use chartens::harness::synth::{synth_corpus, SynthParams};
use chartens::harness::{DatasetIndex, IndexEntry};

fn chartens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chartens"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_index(dir: &Path, n: usize) -> String {
    let types = ["line", "area", "grouped_bar", "stacked_bar"];
    let entries = synth_corpus(&SynthParams { n_charts: n, seed: 12, ..Default::default() })
        .into_iter()
        .enumerate()
        .map(|(i, (id, table))| {
            let truth = dir.join(format!("{id}.tsv"));
            std::fs::write(&truth, table.to_tsv()).unwrap();
            IndexEntry {
                id,
                image_path: None,
                truth_path: truth.file_name().unwrap().into(),
                metadata: BTreeMap::from([("chart_type".to_string(), types[i % 4].to_string())]),
            }
        })
        .collect();
    let path = dir.join("index.json");
    DatasetIndex { entries }.save(&path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_prints_one_row_per_strategy() {
    let o = chartens(&["simulate", "--charts", "6", "--sigma", "0.05", "--strategies", "median,mean", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("median\t") && lines[2].starts_with("mean\t"));
}

#[test]
fn extract_evaluate_and_sweep_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let index = write_index(dir.path(), 8);
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();

    let o = chartens(&["extract", "--index", &index, "--out", run_s, "--sigma", "0.02", "--no-early-stopping", "--k-max", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("summary.tsv").is_file());

    let report = dir.path().join("report");
    let o = chartens(&[
        "evaluate", "--index", &index, "--run-dir", run_s, "--group-by", "chart_type", "--out", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(report.join("report.json").is_file());

    let o = chartens(&["sweep", "--run-dir", run_s, "--index", &index, "--axis", "patience", "--values", "1,2,3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let samples: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(samples.len(), 3);
    assert!(samples.windows(2).all(|w| w[0] <= w[1]), "{samples:?}");
}

#[test]
fn invalid_settings_exit_with_usage_code() {
    let o = chartens(&["simulate", "--charts", "2", "--k-max", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = chartens(&["sweep", "--axis", "depth", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = chartens(&["extract", "--index", "/nonexistent/index.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn benchgen_writes_spec_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("indicator,country,year,value\n");
    for ind in ["A", "B", "C", "D", "E", "F"] {
        for c in ["France", "Kenya", "Chile", "Japan", "Norway", "India", "Brazil", "Egypt", "Peru", "Ghana", "Italy", "Nepal"] {
            for y in 2000..2012 {
                csv.push_str(&format!("{ind},{c},{y},{}.5\n", y - 1990));
            }
        }
    }
    let src = dir.path().join("data.csv");
    std::fs::write(&src, csv).unwrap();
    let out = dir.path().join("bench");
    let o = chartens(&["benchgen", "--source", src.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(DatasetIndex::load(&out.join("index.json")).unwrap().entries.len(), 16);
    let spec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("spec.json")).unwrap()).unwrap();
    assert_eq!(spec["charts"].as_array().unwrap().len(), 16);
}
