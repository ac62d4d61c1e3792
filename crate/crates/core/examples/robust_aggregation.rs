//! Compares the five cell aggregation strategies on samples containing a gross outlier,
//! and shows the relative-MAD uncertainty of each estimate.
//!
//!     cargo run --example robust_aggregation

use chartens::ensemble::{cell_uncertainty, robust_estimate};
use chartens::Strategy;

fn main() {
    let cells: [(&str, &[f64]); 3] = [
        ("clean", &[101.0, 99.5, 100.2, 100.0, 99.8]),
        ("one x10 outlier", &[101.0, 99.5, 1002.0, 100.0, 99.8]),
        ("two modes", &[50.0, 51.0, 100.0, 101.0, 100.5]),
    ];
    print!("{:<18}", "cell");
    for s in Strategy::ALL {
        print!("{:>20}", s.name());
    }
    println!("{:>10}", "u(median)");
    for (name, values) in cells {
        print!("{name:<18}");
        for s in Strategy::ALL {
            print!("{:>20.3}", robust_estimate(values, s));
        }
        let est = robust_estimate(values, Strategy::Median);
        println!("{:>10.4}", cell_uncertainty(values, est).unwrap_or(f64::NAN));
    }
}
