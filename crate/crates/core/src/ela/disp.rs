//! Dispersion of the best points relative to the whole sample.

use super::{DistanceMatrix, FeatureVector};
use crate::stats;

pub(crate) const FRACTIONS: [(f64, &str); 4] = [(0.02, "02"), (0.05, "05"), (0.10, "10"), (0.25, "25")];

fn pairwise(dist: &DistanceMatrix, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            out.push(dist.get(i, j));
        }
    }
    out
}

/// Indices of the `max(2, round(q m))` smallest objective values
/// (stable on ties).
pub(crate) fn best_indices(y: &[f64], q: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let k = ((q * y.len() as f64).round() as usize).clamp(2, y.len());
    order.truncate(k);
    order
}

pub(super) fn compute(dist: &DistanceMatrix, y: &[f64], fv: &mut FeatureVector) {
    let all: Vec<usize> = (0..y.len()).collect();
    let full = pairwise(dist, &all);
    let (mean_all, median_all) = (stats::mean(&full), stats::median(&full));
    if mean_all <= 0.0 || median_all <= 0.0 {
        return;
    }
    for (q, tag) in FRACTIONS {
        let best = pairwise(dist, &best_indices(y, q));
        fv.set(&format!("disp.ratio_mean_{tag}"), stats::mean(&best) / mean_all);
        fv.set(&format!("disp.ratio_median_{tag}"), stats::median(&best) / median_all);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_subset_size() {
        let y: Vec<f64> = (0..240).rev().map(|v| v as f64).collect();
        assert_eq!(best_indices(&y, 0.02).len(), 5);
        assert_eq!(best_indices(&y, 0.25).len(), 60);
        assert_eq!(best_indices(&y, 0.02)[0], 239);
        assert_eq!(best_indices(&[1.0, 0.0, 2.0], 0.02), vec![1, 0]);
    }
}
