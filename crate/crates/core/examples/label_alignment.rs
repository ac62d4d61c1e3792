//! Greedy clustering of row labels from three noisy tables, then support pruning.
//!
//!     cargo run --example label_alignment

use chartens::align::{greedy_cluster, nls, prune, prune_threshold};
use chartens::AlignConfig;

fn main() {
    let tables = vec![
        (0, vec!["2019".to_string(), "2020".into(), "2021".into(), "Total".into()]),
        (1, vec!["2019".to_string(), "2O20".into(), "2021".into()]),
        (2, vec!["2019".to_string(), "2020".into(), "2021 ".into()]),
    ];
    let cfg = AlignConfig::default();
    println!("nls(\"2020\", \"2O20\") = {:.2}", nls("2020", "2O20"));

    let clusters = greedy_cluster(&tables, &cfg);
    for c in &clusters {
        let members: Vec<String> = c.members.iter().map(|m| format!("{:?}@{}", m.label, m.source_id)).collect();
        println!("{:>6} support={} [{}]", c.canonical, c.support(), members.join(", "));
    }

    let kept = prune(clusters, tables.len(), &cfg);
    println!(
        "prune fraction {} -> minimum support {}; kept: {:?}",
        cfg.prune_fraction,
        prune_threshold(tables.len(), cfg.prune_fraction),
        kept.iter().map(|c| c.canonical.as_str()).collect::<Vec<_>>()
    );
}
