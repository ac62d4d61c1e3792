//! Location estimators used for cell-wise aggregation.

use super::Strategy;

const HUBER_C: f64 = 1.345;
/// Scales MAD to a consistent estimate of the normal standard deviation.
const MAD_TO_SIGMA: f64 = 1.4826;
const HUBER_MAX_ITER: usize = 50;
const HUBER_STEP_TOL: f64 = 1e-8;
const RANSAC_MAD_MULTIPLE: f64 = 2.0;

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Median; the mean of the two middle values for even counts. Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty set");
    let v = sorted(values);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        v[mid - 1] + (v[mid] - v[mid - 1]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median absolute deviation about `center` (unscaled).
pub fn mad_about(values: &[f64], center: f64) -> f64 {
    let dev: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    median(&dev)
}

/// Aggregates a non-empty multiset with the chosen strategy.
pub fn robust_estimate(values: &[f64], strategy: Strategy) -> f64 {
    assert!(!values.is_empty(), "robust_estimate needs at least one value");
    let est = match strategy {
        Strategy::Median => median(values),
        Strategy::Mean => mean(values),
        Strategy::Ransac => ransac(values),
        Strategy::WeightedConfidence => weighted_confidence(values),
        Strategy::Huber => huber(values),
    };
    // Keep rounding noise from escaping the data range.
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    est.clamp(lo, hi)
}

fn ransac(values: &[f64]) -> f64 {
    let med = median(values);
    let mad = mad_about(values, med);
    let inliers: Vec<f64> = if mad == 0.0 {
        values.iter().copied().filter(|&v| v == med).collect()
    } else {
        values
            .iter()
            .copied()
            .filter(|&v| (v - med).abs() <= RANSAC_MAD_MULTIPLE * mad)
            .collect()
    };
    if inliers.is_empty() {
        // An even-count median can fall between two values when MAD is 0.
        med
    } else {
        median(&inliers)
    }
}

/// Mean of the `ceil(0.6 n)` values nearest the median.
fn weighted_confidence(values: &[f64]) -> f64 {
    let med = median(values);
    let mut by_distance = values.to_vec();
    by_distance.sort_by(|a, b| {
        (a - med)
            .abs()
            .total_cmp(&(b - med).abs())
            .then(a.total_cmp(b))
    });
    let keep = (6 * values.len()).div_ceil(10);
    mean(&by_distance[..keep])
}

fn huber(values: &[f64]) -> f64 {
    let med = median(values);
    let scale = MAD_TO_SIGMA * mad_about(values, med);
    if scale == 0.0 {
        return med;
    }
    let mut mu = med;
    for _ in 0..HUBER_MAX_ITER {
        let (mut num, mut den) = (0.0, 0.0);
        for &v in values {
            let r = ((v - mu) / scale).abs();
            let w = if r <= HUBER_C { 1.0 } else { HUBER_C / r };
            num += w * v;
            den += w;
        }
        let next = num / den;
        let step = (next - mu).abs();
        mu = next;
        if step < HUBER_STEP_TOL {
            break;
        }
    }
    mu
}
