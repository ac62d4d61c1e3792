//! Benchmark generation from long-format indicator data.
//!
//! The source CSV has columns `indicator,country,year,value` (empty value = missing).
//! Series with more than half of their indicator's years missing, with interior gaps,
//! or with fewer than `min_years` values are dropped. Each chart takes one indicator and
//! 2 or 3 of its series, never reusing a series, and gets a chart type, a plotting
//! backend and a randomized style. Outputs are ground-truth TSVs, a renderer spec and a
//! dataset index.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{read_json, write_file, write_json, DatasetIndex, HarnessError, IndexEntry, Result};
use crate::table::{NormalizedTable, Value};

pub const CHART_TYPES: [&str; 4] = ["line", "area", "grouped_bar", "stacked_bar"];
pub const BACKENDS: [&str; 4] = ["matplotlib", "seaborn", "plotly", "bokeh"];
pub const FONT_FAMILIES: [&str; 6] = [
    "DejaVu Sans",
    "DejaVu Serif",
    "DejaVu Sans Mono",
    "Liberation Sans",
    "Liberation Serif",
    "Liberation Mono",
];
pub const FONT_SIZES: [u32; 6] = [8, 9, 10, 11, 12, 14];
pub const PALETTES: [&str; 7] = ["tab10", "Set1", "Set2", "Dark2", "Paired", "viridis", "colorblind"];
pub const GRID_STYLES: [&str; 3] = ["solid", "dashed", "dotted"];
pub const LINE_STYLES: [&str; 4] = ["solid", "dashed", "dashdot", "dotted"];
pub const MARKERS: [&str; 5] = ["none", "circle", "square", "triangle", "diamond"];
pub const TRANSPARENCY: [f64; 4] = [0.55, 0.7, 0.85, 1.0];
/// Width and height in inches.
pub const FIGURE_SIZES: [[f64; 2]; 5] = [[6.0, 4.0], [8.0, 5.0], [10.0, 6.0], [7.0, 7.0], [12.0, 6.0]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchgenParams {
    pub n_charts: usize,
    pub seed: u64,
    /// Exact round-robin over chart type x backend (shuffled) instead of i.i.d. draws.
    pub balanced: bool,
    pub max_grouped_bar_years: usize,
    pub min_years: usize,
}

impl Default for BenchgenParams {
    fn default() -> Self {
        Self {
            n_charts: 16,
            seed: 0,
            balanced: true,
            max_grouped_bar_years: 12,
            min_years: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub indicator: String,
    pub country: String,
    pub points: BTreeMap<i32, f64>,
    /// First and last year listed in the source, including rows with empty values.
    pub listed: (i32, i32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub enabled: bool,
    pub style: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub font_family: String,
    pub font_size: u32,
    pub palette: String,
    pub grid: Grid,
    /// One entry per series.
    pub line_styles: Vec<String>,
    pub markers: Vec<String>,
    pub transparency: f64,
    pub figure_size: [f64; 2],
}

/// Table payload mirroring the truth TSV exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub id: String,
    pub chart_type: String,
    pub backend: String,
    pub title: String,
    pub x_label: String,
    pub series: SeriesTable,
    pub style: Style,
    /// Relative to the spec file.
    pub truth_path: PathBuf,
    pub output_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub version: u32,
    pub seed: u64,
    pub charts: Vec<ChartSpec>,
}

/// Reads `indicator,country,year,value` rows. Duplicate (indicator, country, year)
/// rows keep the last value.
pub fn load_series(path: &Path) -> Result<Vec<Series>> {
    let bad = |message: String| HarnessError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let (ci, cc, cy, cv) = (col("indicator")?, col("country")?, col("year")?, col("value")?);
    let mut map: BTreeMap<(String, String), BTreeMap<i32, Option<f64>>> = BTreeMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let year: i32 = rec[cy]
            .parse()
            .map_err(|_| bad(format!("record {}: bad year {:?}", line + 1, &rec[cy])))?;
        let value = if rec[cv].is_empty() {
            None
        } else {
            let v: f64 = rec[cv]
                .parse()
                .map_err(|_| bad(format!("record {}: bad value {:?}", line + 1, &rec[cv])))?;
            v.is_finite().then_some(v)
        };
        map.entry((rec[ci].to_string(), rec[cc].to_string()))
            .or_default()
            .insert(year, value);
    }
    Ok(map
        .into_iter()
        .map(|((indicator, country), pts)| {
            let listed = (
                *pts.keys().next().expect("at least one row"),
                *pts.keys().next_back().expect("at least one row"),
            );
            Series {
                indicator,
                country,
                points: pts.into_iter().filter_map(|(y, v)| v.map(|v| (y, v))).collect(),
                listed,
            }
        })
        .collect())
}

/// Whether a series survives pruning against its indicator's year span.
pub fn usable(series: &Series, span: (i32, i32), min_years: usize) -> bool {
    let total = (span.1 - span.0 + 1) as usize;
    let present = series.points.len();
    if present < min_years.max(1) || total - present > total / 2 {
        return false;
    }
    let first = *series.points.keys().next().expect("non-empty");
    let last = *series.points.keys().next_back().expect("non-empty");
    (last - first + 1) as usize == present
}

/// Year span of each indicator across all of its series.
fn indicator_spans(all: &[Series]) -> BTreeMap<&str, (i32, i32)> {
    let mut spans: BTreeMap<&str, (i32, i32)> = BTreeMap::new();
    for s in all {
        let e = spans.entry(&s.indicator).or_insert(s.listed);
        e.0 = e.0.min(s.listed.0);
        e.1 = e.1.max(s.listed.1);
    }
    spans
}

/// Evenly spaced subset of `n` indices keeping both ends.
fn subsample(n: usize, keep: usize) -> Vec<usize> {
    if n <= keep || keep < 2 {
        return (0..n.min(keep)).collect();
    }
    (0..keep).map(|i| (i * (n - 1) + (keep - 1) / 2) / (keep - 1)).collect()
}

fn build_table(series: &[&Series], chart_type: &str, params: &BenchgenParams) -> NormalizedTable {
    let lo = series.iter().map(|s| *s.points.keys().next().expect("usable")).min().expect("non-empty");
    let hi = series.iter().map(|s| *s.points.keys().next_back().expect("usable")).max().expect("non-empty");
    let mut years: Vec<i32> = (lo..=hi)
        .filter(|y| series.iter().any(|s| s.points.contains_key(y)))
        .collect();
    if chart_type == "grouped_bar" && years.len() > params.max_grouped_bar_years {
        years = subsample(years.len(), params.max_grouped_bar_years)
            .into_iter()
            .map(|i| years[i])
            .collect();
    }
    let values = years
        .iter()
        .map(|y| series.iter().map(|s| s.points.get(y).copied()).collect())
        .collect();
    NormalizedTable::new(
        years.iter().map(|y| y.to_string()).collect(),
        series.iter().map(|s| s.country.clone()).collect(),
        values,
        0,
    )
    .expect("benchmark table is well formed")
}

fn draw_style(rng: &mut ChaCha8Rng, n_series: usize) -> Style {
    let pick = |rng: &mut ChaCha8Rng, pool: &[&str]| pool.choose(rng).expect("non-empty pool").to_string();
    Style {
        font_family: pick(rng, &FONT_FAMILIES),
        font_size: *FONT_SIZES.choose(rng).expect("non-empty"),
        palette: pick(rng, &PALETTES),
        grid: Grid {
            enabled: rng.random_bool(0.5),
            style: pick(rng, &GRID_STYLES),
        },
        line_styles: (0..n_series).map(|_| pick(rng, &LINE_STYLES)).collect(),
        markers: (0..n_series).map(|_| pick(rng, &MARKERS)).collect(),
        transparency: *TRANSPARENCY.choose(rng).expect("non-empty"),
        figure_size: *FIGURE_SIZES.choose(rng).expect("non-empty"),
    }
}

fn assignments(rng: &mut ChaCha8Rng, n: usize, balanced: bool) -> Vec<(usize, usize)> {
    let combos = CHART_TYPES.len() * BACKENDS.len();
    let mut out: Vec<usize> = if balanced {
        (0..n).map(|i| i % combos).collect()
    } else {
        (0..n).map(|_| rng.random_range(0..combos)).collect()
    };
    if balanced {
        out.shuffle(rng);
    }
    out.into_iter().map(|c| (c / BACKENDS.len(), c % BACKENDS.len())).collect()
}

/// Builds the benchmark from already-loaded series. Pure given `params.seed`.
pub fn generate(series: &[Series], params: &BenchgenParams) -> Result<(BenchSpec, Vec<NormalizedTable>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let spans = indicator_spans(series);
    let mut pools: BTreeMap<&str, Vec<&Series>> = BTreeMap::new();
    for s in series {
        if !s.points.is_empty() && usable(s, spans[s.indicator.as_str()], params.min_years) {
            pools.entry(&s.indicator).or_default().push(s);
        }
    }
    for pool in pools.values_mut() {
        pool.shuffle(&mut rng);
    }

    let kinds = assignments(&mut rng, params.n_charts, params.balanced);
    let mut charts = Vec::with_capacity(params.n_charts);
    let mut tables = Vec::with_capacity(params.n_charts);
    for (i, &(ti, bi)) in kinds.iter().enumerate() {
        let open: Vec<&str> = pools.iter().filter(|(_, p)| p.len() >= 2).map(|(k, _)| *k).collect();
        let Some(&indicator) = open.choose(&mut rng) else {
            return Err(HarnessError::InsufficientSeries {
                requested: params.n_charts,
                built: i,
            });
        };
        let pool = pools.get_mut(indicator).expect("open indicator");
        let k = rng.random_range(2..=3).min(pool.len());
        let mut chosen: Vec<&Series> = pool.split_off(pool.len() - k);
        chosen.sort_by(|a, b| a.country.cmp(&b.country));

        let id = format!("chart-{i:04}");
        let chart_type = CHART_TYPES[ti];
        let table = build_table(&chosen, chart_type, params);
        charts.push(ChartSpec {
            id: id.clone(),
            chart_type: chart_type.to_string(),
            backend: BACKENDS[bi].to_string(),
            title: indicator.to_string(),
            x_label: "Year".to_string(),
            series: SeriesTable {
                row_labels: table.row_labels.clone(),
                col_labels: table.col_labels.clone(),
                values: table.values.clone(),
            },
            style: draw_style(&mut rng, chosen.len()),
            truth_path: PathBuf::from("truth").join(format!("{id}.tsv")),
            output_path: PathBuf::from("images").join(format!("{id}.png")),
        });
        tables.push(table);
    }
    Ok((
        BenchSpec {
            version: 1,
            seed: params.seed,
            charts,
        },
        tables,
    ))
}

#[derive(Debug, Clone)]
pub struct BenchgenOutput {
    pub spec: BenchSpec,
    pub index: DatasetIndex,
    pub spec_path: PathBuf,
    pub index_path: PathBuf,
}

/// Writes `truth/<id>.tsv`, `spec.json` and `index.json` under `out_dir`.
pub fn benchgen(source_csv: &Path, params: &BenchgenParams, out_dir: &Path) -> Result<BenchgenOutput> {
    let series = load_series(source_csv)?;
    let (spec, tables) = generate(&series, params)?;
    let mut entries = Vec::with_capacity(spec.charts.len());
    for (chart, table) in spec.charts.iter().zip(&tables) {
        write_file(&out_dir.join(&chart.truth_path), table.to_tsv())?;
        entries.push(IndexEntry {
            id: chart.id.clone(),
            image_path: Some(chart.output_path.clone()),
            truth_path: chart.truth_path.clone(),
            metadata: BTreeMap::from([
                ("chart_type".to_string(), chart.chart_type.clone()),
                ("library".to_string(), chart.backend.clone()),
                ("indicator".to_string(), chart.title.clone()),
            ]),
        });
    }
    let index = DatasetIndex { entries };
    let spec_path = out_dir.join("spec.json");
    let index_path = out_dir.join("index.json");
    write_json(&spec_path, &spec)?;
    index.save(&index_path)?;
    Ok(BenchgenOutput {
        spec,
        index,
        spec_path,
        index_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub image_path: Option<PathBuf>,
    pub status: String,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

/// Shells out to the renderer as `<command...> <spec> --manifest <out_dir>/manifest.json
/// --jobs <jobs>`, then drops index image paths for charts the manifest marks failed.
/// Returns the ids that failed to render.
pub fn render(command: &str, output: &mut BenchgenOutput, jobs: usize) -> Result<Vec<String>> {
    let mut words = command.split_whitespace();
    let program = words
        .next()
        .ok_or_else(|| HarnessError::Render("empty render command".to_string()))?;
    let base = output.spec_path.parent().unwrap_or(Path::new("."));
    let manifest_path = base.join("manifest.json");
    let status = Command::new(program)
        .args(words)
        .arg(&output.spec_path)
        .arg("--manifest")
        .arg(&manifest_path)
        .arg("--jobs")
        .arg(jobs.max(1).to_string())
        .status()
        .map_err(|e| HarnessError::Render(format!("cannot run {program:?}: {e}")))?;
    if !status.success() {
        log::warn!("renderer exited with {status}");
    }
    let manifest: Manifest = read_json(&manifest_path)?;
    let by_id: BTreeMap<&str, &ManifestEntry> = manifest.entries.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut failed = Vec::new();
    for entry in &mut output.index.entries {
        match by_id.get(entry.id.as_str()) {
            Some(m) if m.status == "ok" => {
                if let Some(p) = &m.image_path {
                    entry.image_path = Some(p.clone());
                }
            }
            other => {
                let reason = other.and_then(|m| m.error.clone()).unwrap_or_else(|| "not rendered".to_string());
                log::warn!("{}: {reason}", entry.id);
                entry.image_path = None;
                failed.push(entry.id.clone());
            }
        }
    }
    output.index.save(&output.index_path)?;
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ingest, parse_canonical};

    fn series(ind: &str, country: &str, pts: &[(i32, f64)]) -> Series {
        Series {
            indicator: ind.into(),
            country: country.into(),
            points: pts.iter().copied().collect(),
            listed: (pts[0].0, pts[pts.len() - 1].0),
        }
    }

    fn full(ind: &str, country: &str, years: std::ops::Range<i32>) -> Series {
        let pts: Vec<(i32, f64)> = years.map(|y| (y, y as f64 / 10.0)).collect();
        series(ind, country, &pts)
    }

    #[test]
    fn pruning_rules() {
        let span = (2000, 2009);
        assert!(usable(&full("i", "a", 2000..2010), span, 4));
        // Ends missing are fine.
        assert!(usable(&full("i", "a", 2002..2009), span, 4));
        // Interior gap.
        let gap = series("i", "a", &[(2000, 1.0), (2001, 1.0), (2003, 1.0), (2004, 1.0), (2005, 1.0), (2006, 1.0)]);
        assert!(!usable(&gap, span, 4));
        // More than half missing.
        assert!(!usable(&full("i", "a", 2000..2004), span, 4));
        // Exactly half missing is kept.
        assert!(usable(&full("i", "a", 2000..2005), span, 4));
    }

    #[test]
    fn subsample_keeps_ends() {
        let s = subsample(30, 12);
        assert_eq!(s.len(), 12);
        assert_eq!((s[0], s[11]), (0, 29));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(5, 12), vec![0, 1, 2, 3, 4]);
    }

    fn corpus(n_ind: usize, per: usize) -> Vec<Series> {
        let mut out = Vec::new();
        for i in 0..n_ind {
            for c in 0..per {
                out.push(full(&format!("ind{i}"), &format!("country{c}"), 1990..2020));
            }
        }
        out
    }

    #[test]
    fn balanced_assignment_and_no_reuse() {
        let src = corpus(8, 14);
        let params = BenchgenParams { n_charts: 32, seed: 4, ..Default::default() };
        let (spec, tables) = generate(&src, &params).unwrap();
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for c in &spec.charts {
            *counts.entry((c.chart_type.clone(), c.backend.clone())).or_default() += 1;
        }
        assert_eq!(counts.len(), 16);
        assert!(counts.values().all(|&n| n == 2));
        let mut used = std::collections::HashSet::new();
        for (c, t) in spec.charts.iter().zip(&tables) {
            assert!((2..=3).contains(&t.n_cols()));
            for country in &t.col_labels {
                assert!(used.insert((c.title.clone(), country.clone())), "series reused");
            }
            if c.chart_type == "grouped_bar" {
                assert!(t.n_rows() <= 12);
            } else {
                assert_eq!(t.n_rows(), 30);
            }
            assert_eq!(c.style.line_styles.len(), t.n_cols());
            // The truth TSV survives the tolerant reader unchanged.
            let back = ingest(&t.to_tsv(), 0).unwrap();
            assert_eq!(&back, t);
        }
    }

    #[test]
    fn insufficient_series() {
        let src = corpus(1, 5);
        let params = BenchgenParams { n_charts: 3, ..Default::default() };
        assert!(matches!(
            generate(&src, &params),
            Err(HarnessError::InsufficientSeries { requested: 3, built: 2 })
        ));
    }

    #[test]
    fn files_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("src.csv");
        let mut text = String::from("indicator,country,year,value\n");
        for s in corpus(6, 9) {
            for (y, v) in &s.points {
                text.push_str(&format!("{},{},{y},{v}\n", s.indicator, s.country));
            }
        }
        // A series with an interior gap that must never be used.
        for y in 1990..2020 {
            let v = if y == 2005 { String::new() } else { "1".to_string() };
            text.push_str(&format!("ind0,Gapland,{y},{v}\n"));
        }
        std::fs::write(&csv_path, text).unwrap();
        let params = BenchgenParams { n_charts: 16, seed: 9, ..Default::default() };
        let a = benchgen(&csv_path, &params, &dir.path().join("a")).unwrap();
        let b = benchgen(&csv_path, &params, &dir.path().join("b")).unwrap();
        let read = |p: &Path| std::fs::read(p).unwrap();
        assert_eq!(read(&a.spec_path), read(&b.spec_path));
        assert!(a.spec.charts.iter().all(|c| !c.series.col_labels.contains(&"Gapland".to_string())));
        let idx = DatasetIndex::load(&a.index_path).unwrap();
        assert_eq!(idx.entries.len(), 16);
        let t = parse_canonical(&std::fs::read_to_string(&idx.entries[0].truth_path).unwrap(), 0).unwrap();
        assert_eq!(t.values, a.spec.charts[0].series.values);
    }
}
