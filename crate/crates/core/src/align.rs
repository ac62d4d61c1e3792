//! Cross-sample label alignment.
//!
//! Row labels and column labels are clustered independently with a greedy pass over
//! labels in `(source_id, position)` order. A label joins the most similar existing
//! cluster whose representative (its first label) is at least `cluster_tau` similar and
//! which holds no label from the same sampled table; otherwise it opens a new cluster.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    /// Minimum normalized Levenshtein similarity to join a cluster.
    pub cluster_tau: f64,
    /// Clusters seen in fewer than this fraction of tables are dropped; 0 disables pruning.
    pub prune_fraction: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            cluster_tau: 0.5,
            prune_fraction: 0.2,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("cluster_tau", self.cluster_tau),
            ("prune_fraction", self.prune_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub label: String,
    pub source_id: usize,
    /// Position of the label within its table's row or column list.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCluster {
    pub members: Vec<Member>,
    pub representative: String,
    pub canonical: String,
}

impl LabelCluster {
    fn open(member: Member) -> Self {
        Self {
            representative: member.label.clone(),
            canonical: member.label.clone(),
            members: vec![member],
        }
    }

    /// Number of distinct tables contributing a label.
    pub fn support(&self) -> usize {
        let mut ids: Vec<usize> = self.members.iter().map(|m| m.source_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    fn has_source(&self, source_id: usize) -> bool {
        self.members.iter().any(|m| m.source_id == source_id)
    }

    /// Member position contributed by `source_id`, if any.
    pub fn position_in(&self, source_id: usize) -> Option<usize> {
        self.members
            .iter()
            .find(|m| m.source_id == source_id)
            .map(|m| m.position)
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `lev(a, b) / max(|a|, |b|)` on raw strings; 0 when both are empty.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / max as f64
}

/// Normalized Levenshtein similarity on lowercased, trimmed labels.
pub fn nls(a: &str, b: &str) -> f64 {
    let a = a.trim().to_lowercase();
    let b = b.trim().to_lowercase();
    1.0 - normalized_levenshtein(&a, &b)
}

/// Greedy clustering of labels. `labels_by_table` pairs each table's `source_id` with
/// its ordered labels; tables are processed by ascending `source_id`.
pub fn greedy_cluster(labels_by_table: &[(usize, Vec<String>)], cfg: &AlignConfig) -> Vec<LabelCluster> {
    let mut order: Vec<&(usize, Vec<String>)> = labels_by_table.iter().collect();
    order.sort_by_key(|(id, _)| *id);

    let mut clusters: Vec<LabelCluster> = Vec::new();
    for (source_id, labels) in order {
        for (position, label) in labels.iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for (idx, cluster) in clusters.iter().enumerate() {
                if cluster.has_source(*source_id) {
                    continue;
                }
                let sim = nls(label, &cluster.representative);
                // Strict `>` keeps the earliest-created cluster on ties.
                if sim >= cfg.cluster_tau && best.is_none_or(|(_, s)| sim > s) {
                    best = Some((idx, sim));
                }
            }
            let member = Member {
                label: label.clone(),
                source_id: *source_id,
                position,
            };
            match best {
                Some((idx, _)) => clusters[idx].members.push(member),
                None => clusters.push(LabelCluster::open(member)),
            }
        }
    }
    for cluster in &mut clusters {
        cluster.canonical = canonical(cluster);
    }
    debug_assert!(clusters.iter().all(|c| c.support() == c.members.len()));
    clusters
}

/// Minimum support a cluster needs to survive pruning.
pub fn prune_threshold(n_tables: usize, prune_fraction: f64) -> usize {
    if prune_fraction <= 0.0 {
        return 0;
    }
    // The small slack keeps exact products such as 0.2 * 15 from rounding up to 4.
    (prune_fraction * n_tables as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Drops clusters whose support is below `ceil(prune_fraction * n_tables)`.
pub fn prune(clusters: Vec<LabelCluster>, n_tables: usize, cfg: &AlignConfig) -> Vec<LabelCluster> {
    let min_support = prune_threshold(n_tables, cfg.prune_fraction);
    clusters
        .into_iter()
        .filter(|c| c.support() >= min_support)
        .collect()
}

/// Most frequent member label, ties broken by the lexicographically smallest label.
pub fn canonical(cluster: &LabelCluster) -> String {
    let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
    for m in &cluster.members {
        *counts.entry(m.label.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (label, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l.to_string()).unwrap_or_default()
}
