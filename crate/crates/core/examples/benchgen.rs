//! Generates a small balanced benchmark (truth tables, renderer spec, dataset index)
//! from synthetic indicator data in long CSV format.
//!
//!     cargo run --example benchgen

use chartens::harness::benchgen::{benchgen, BenchgenParams};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let csv_path = dir.path().join("indicators.csv");
    let mut csv = String::from("indicator,country,year,value\n");
    let countries = ["France", "Kenya", "Chile", "Japan", "Norway", "India", "Brazil", "Egypt", "Spain", "Peru", "Ghana", "Italy"];
    for (i, indicator) in ["GDP per capita", "CO2 emissions", "Life expectancy", "Urban population"].iter().enumerate() {
        for (j, country) in countries.iter().enumerate() {
            for year in 1990..2020 {
                // Leading gaps are allowed; an interior gap disqualifies Spain's CO2 series.
                let missing = (year < 1990 + (j % 3) as i32) || (i == 1 && *country == "Spain" && year == 2005);
                let value = if missing { String::new() } else { format!("{:.2}", (i + 1) as f64 * (10.0 + j as f64) * (1.0 + (year - 1990) as f64 * 0.03)) };
                csv.push_str(&format!("{indicator},{country},{year},{value}\n"));
            }
        }
    }
    std::fs::write(&csv_path, csv)?;

    let out = benchgen(&csv_path, &BenchgenParams { n_charts: 16, seed: 1, ..Default::default() }, &dir.path().join("bench"))?;
    for c in &out.spec.charts {
        println!(
            "{} {:<12} {:<10} {:<18} {} x {}  font={} palette={}",
            c.id,
            c.chart_type,
            c.backend,
            c.title,
            c.series.row_labels.len(),
            c.series.col_labels.len(),
            c.style.font_family,
            c.style.palette
        );
    }
    println!("\nspec: {}\nindex: {}", out.spec_path.display(), out.index_path.display());
    Ok(())
}
