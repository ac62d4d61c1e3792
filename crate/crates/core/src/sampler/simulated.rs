//! Seeded table-corruption oracle standing in for a stochastic vision-language model.
//!
//! Each draw is a pure function of `(truth, noise model, draw_index)`: the RNG is a
//! ChaCha stream keyed by the model seed with the draw index as stream id, so draws can
//! be produced in any order or in parallel.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Sampler, SamplerError};
use crate::table::{format_value, NormalizedTable, Value};

/// Labels used for spurious rows. Every entry is below 0.5 normalized Levenshtein
/// similarity to year labels and to the synthetic corpus' series names.
pub const SPURIOUS_LABELS: [&str; 8] = [
    "Total", "Average", "Other", "Unknown", "Forecast", "Estimate", "Projection", "Residual",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Standard deviation of multiplicative Gaussian value noise.
    pub value_noise_rel: f64,
    pub p_drop_row: f64,
    pub p_drop_col: f64,
    pub p_extra_row: f64,
    pub p_label_typo: f64,
    pub p_transpose: f64,
    pub p_cell_blank: f64,
    pub p_ragged: f64,
    /// Probability a value is multiplied by `outlier_scale` (gross misreading).
    pub p_outlier: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::identity(0)
    }
}

impl NoiseModel {
    /// No corruption at all.
    pub fn identity(seed: u64) -> Self {
        Self {
            value_noise_rel: 0.0,
            p_drop_row: 0.0,
            p_drop_col: 0.0,
            p_extra_row: 0.0,
            p_label_typo: 0.0,
            p_transpose: 0.0,
            p_cell_blank: 0.0,
            p_ragged: 0.0,
            p_outlier: 0.0,
            outlier_scale: 10.0,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.value_noise_rel >= 0.0 && self.value_noise_rel.is_finite()) {
            return Err(format!("value_noise_rel must be >= 0, got {}", self.value_noise_rel));
        }
        for (name, p) in [
            ("p_drop_row", self.p_drop_row),
            ("p_drop_col", self.p_drop_col),
            ("p_extra_row", self.p_extra_row),
            ("p_label_typo", self.p_label_typo),
            ("p_transpose", self.p_transpose),
            ("p_cell_blank", self.p_cell_blank),
            ("p_ragged", self.p_ragged),
            ("p_outlier", self.p_outlier),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !self.outlier_scale.is_finite() {
            return Err("outlier_scale must be finite".to_string());
        }
        Ok(())
    }
}

/// Produces one corrupted rendering of `truth` as a fenced TSV reply.
pub fn simulated_sample(truth: &NormalizedTable, nm: &NoiseModel, draw_index: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(nm.seed);
    rng.set_stream(draw_index as u64);

    let normal = Normal::new(0.0, nm.value_noise_rel).expect("validated sigma");
    let mut rows: Vec<String> = truth.row_labels.clone();
    let mut cols: Vec<String> = truth.col_labels.clone();
    let mut grid: Vec<Vec<Value>> = truth
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    v.map(|x| {
                        let mut y = x * (1.0 + normal.sample(&mut rng));
                        if rng.random_bool(nm.p_outlier) {
                            y *= nm.outlier_scale;
                        }
                        y
                    })
                })
                .collect()
        })
        .collect();

    let keep_rows: Vec<bool> = rows.iter().map(|_| !rng.random_bool(nm.p_drop_row)).collect();
    let keep_cols: Vec<bool> = cols.iter().map(|_| !rng.random_bool(nm.p_drop_col)).collect();
    rows = filter_by(&rows, &keep_rows);
    cols = filter_by(&cols, &keep_cols);
    grid = filter_by(&grid, &keep_rows)
        .into_iter()
        .map(|r| filter_by(&r, &keep_cols))
        .collect();

    if rng.random_bool(nm.p_extra_row) && !cols.is_empty() {
        let label = SPURIOUS_LABELS.choose(&mut rng).expect("non-empty pool").to_string();
        let values: Vec<Value> = (0..cols.len())
            .map(|j| {
                let present: Vec<f64> = grid.iter().filter_map(|r| r[j]).collect();
                if present.is_empty() {
                    None
                } else {
                    let mean = present.iter().sum::<f64>() / present.len() as f64;
                    Some(mean * rng.random_range(0.5..1.5))
                }
            })
            .collect();
        let at = rng.random_range(0..=rows.len());
        rows.insert(at, label);
        grid.insert(at, values);
    }

    for label in rows.iter_mut().chain(cols.iter_mut()) {
        if rng.random_bool(nm.p_label_typo) {
            *label = typo(label, &mut rng);
        }
    }

    for cell in grid.iter_mut().flatten() {
        if rng.random_bool(nm.p_cell_blank) {
            *cell = None;
        }
    }

    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut header = vec![String::new()];
    header.extend(cols.iter().cloned());
    cells.push(header);
    for (label, values) in rows.iter().zip(&grid) {
        let mut line = vec![label.clone()];
        line.extend(values.iter().map(|v| format_value(*v)));
        cells.push(line);
    }
    if rng.random_bool(nm.p_transpose) {
        cells = transpose_cells(&cells);
    }
    for line in cells.iter_mut().skip(1) {
        if rng.random_bool(nm.p_ragged) {
            if rng.random_bool(0.5) && line.len() > 1 {
                line.pop();
            } else {
                line.push(format!("{}", rng.random_range(0..1000)));
            }
        }
    }

    let body: Vec<String> = cells.iter().map(|l| l.join("\t")).collect();
    format!("```tsv\n{}\n```", body.join("\n"))
}

fn filter_by<T: Clone>(items: &[T], keep: &[bool]) -> Vec<T> {
    items
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(x, _)| x.clone())
        .collect()
}

fn transpose_cells(cells: &[Vec<String>]) -> Vec<Vec<String>> {
    let width = cells.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| cells.iter().map(|row| row[j].clone()).collect())
        .collect()
}

const TYPO_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// One random substitution, insertion or deletion.
fn typo(label: &str, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = label.chars().collect();
    let random_char = |rng: &mut dyn rand::RngCore| TYPO_ALPHABET[rng.random_range(0..TYPO_ALPHABET.len())] as char;
    let op = if chars.len() <= 1 { rng.random_range(0..2) } else { rng.random_range(0..3) };
    match op {
        0 if !chars.is_empty() => {
            let i = rng.random_range(0..chars.len());
            let mut c = random_char(rng);
            while c == chars[i] {
                c = random_char(rng);
            }
            chars[i] = c;
        }
        2 => {
            let i = rng.random_range(0..chars.len());
            chars.remove(i);
        }
        _ => {
            let i = rng.random_range(0..=chars.len());
            chars.insert(i, random_char(rng));
        }
    }
    chars.into_iter().collect()
}

/// Draws from [`simulated_sample`] over a fixed truth table.
#[derive(Debug, Clone)]
pub struct SimulatedSampler {
    pub truth: NormalizedTable,
    pub noise: NoiseModel,
}

impl SimulatedSampler {
    pub fn new(truth: NormalizedTable, noise: NoiseModel) -> Self {
        Self { truth, noise }
    }
}

impl Sampler for SimulatedSampler {
    fn sample(&self, draw_index: usize) -> Result<String, SamplerError> {
        Ok(simulated_sample(&self.truth, &self.noise, draw_index))
    }
}
