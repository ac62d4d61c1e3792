//! Synthetic ground-truth tables shaped like indicator time series: year rows and
//! country columns.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::table::NormalizedTable;

/// Column names for synthetic tables; pairwise similarity stays below the default
/// clustering threshold, and so does similarity to the spurious-row labels.
pub const SERIES_POOL: [&str; 14] = [
    "France", "Germany", "Italy", "Spain", "Japan", "Canada", "Brazil", "India", "Mexico",
    "Kenya", "Chile", "Egypt", "Norway", "Poland",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_charts: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_charts: 50,
            rows: 10,
            cols: 3,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.rows == 0 || self.cols == 0 {
            return Err("rows and cols must be positive".to_string());
        }
        if self.cols > SERIES_POOL.len() {
            return Err(format!("at most {} columns are supported", SERIES_POOL.len()));
        }
        Ok(())
    }
}

/// One random-walk table per chart; chart `i` depends only on `(seed, i)`.
pub fn synth_table(params: &SynthParams, index: usize) -> NormalizedTable {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    let start: i32 = rng.random_range(1960..=2010);
    let rows: Vec<String> = (0..params.rows as i32).map(|i| (start + i).to_string()).collect();
    let mut pool = SERIES_POOL.to_vec();
    pool.shuffle(&mut rng);
    let cols: Vec<String> = pool[..params.cols].iter().map(|s| s.to_string()).collect();

    let mut values = vec![vec![None; params.cols]; params.rows];
    for c in 0..params.cols {
        let mut level: f64 = 10f64.powf(rng.random_range(1.0..3.0));
        for row in values.iter_mut() {
            row[c] = Some((level * 100.0).round() / 100.0);
            level *= 1.0 + rng.random_range(-0.08..0.1);
        }
    }
    NormalizedTable::new(rows, cols, values, 0).expect("synthetic table is well formed")
}

pub fn synth_corpus(params: &SynthParams) -> Vec<(String, NormalizedTable)> {
    (0..params.n_charts)
        .map(|i| (format!("synth-{i:04}"), synth_table(params, i)))
        .collect()
}
