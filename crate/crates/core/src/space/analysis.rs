//! Studies over the reference corpus: agreement between distance
//! measures, separation of same-function and different-function pairs,
//! and feature variability.

use super::{vector_distance, wasserstein_1d, DistanceMetric, ReferenceSet};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Normalized replicates of one labelled source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub label: usize,
    pub id: String,
    /// `replicate x feature`.
    pub replicates: Vec<Vec<f64>>,
}

impl Source {
    pub fn feature(&self, f: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r[f]).filter(|v| v.is_finite()).collect()
    }

    /// Per-feature mean of finite replicate values (`NaN` if none).
    pub fn mean_vector(&self) -> Vec<f64> {
        let nf = self.replicates.first().map_or(0, Vec::len);
        (0..nf)
            .map(|f| {
                let v = self.feature(f);
                if v.is_empty() {
                    f64::NAN
                } else {
                    stats::mean(&v)
                }
            })
            .collect()
    }
}

/// One source per reference instance, labelled by function id.
pub fn reference_sources(reference: &ReferenceSet) -> Vec<Source> {
    reference
        .corpus
        .iter()
        .map(|e| Source {
            label: e.fid,
            id: e.sample.source.clone(),
            replicates: reference.normalize_sample(&e.sample),
        })
        .collect()
}

/// Distance between two sources; vector metrics use mean vectors over
/// features finite on both sides, Wasserstein averages per-feature
/// distances between replicate distributions. `NaN` when undefined.
pub fn source_distance(metric: DistanceMetric, a: &Source, b: &Source) -> f64 {
    if metric == DistanceMetric::Wasserstein {
        let nf = a.replicates.first().map_or(0, Vec::len);
        let per: Vec<f64> = (0..nf).filter_map(|f| wasserstein_1d(&a.feature(f), &b.feature(f)).ok()).collect();
        return if per.is_empty() { f64::NAN } else { stats::mean(&per) };
    }
    let (u, v): (Vec<f64>, Vec<f64>) =
        a.mean_vector().into_iter().zip(b.mean_vector()).filter(|(x, y)| x.is_finite() && y.is_finite()).unzip();
    vector_distance(metric, &u, &v).unwrap_or(f64::NAN)
}

/// All `i < j` index pairs in row-major order.
pub fn pair_indices(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

pub fn pairwise_distances(metric: DistanceMetric, sources: &[Source]) -> Vec<f64> {
    pair_indices(sources.len()).par_iter().map(|&(i, j)| source_distance(metric, &sources[i], &sources[j])).collect()
}

/// Kendall tau-b between every pair of distance lists (pairs where either
/// list is `NaN` are skipped). Symmetric with unit diagonal.
pub fn kendall_tau_matrix(lists: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = lists.len();
    let mut out = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let (a, b): (Vec<f64>, Vec<f64>) = lists[i]
                .iter()
                .zip(&lists[j])
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (*x, *y))
                .unzip();
            let t = stats::kendall_tau_b(&a, &b);
            out[i][j] = t;
            out[j][i] = t;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerOuter {
    pub metric: DistanceMetric,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl InnerOuter {
    pub fn auc(&self) -> f64 {
        auc(&self.inner, &self.outer)
    }
}

/// Splits pairwise distances into same-label and different-label sets,
/// both scaled by the largest finite distance of the metric.
pub fn split_inner_outer(metric: DistanceMetric, sources: &[Source], distances: &[f64]) -> InnerOuter {
    let max = distances.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for (&(i, j), &d) in pair_indices(sources.len()).iter().zip(distances) {
        if !d.is_finite() {
            continue;
        }
        if sources[i].label == sources[j].label {
            inner.push(d / scale);
        } else {
            outer.push(d / scale);
        }
    }
    InnerOuter { metric, inner, outer }
}

pub fn inner_outer_analysis(sources: &[Source]) -> Vec<InnerOuter> {
    DistanceMetric::ALL.iter().map(|&m| split_inner_outer(m, sources, &pairwise_distances(m, sources))).collect()
}

/// Probability that a random inner distance is below a random outer one,
/// ties counting one half.
pub fn auc(inner: &[f64], outer: &[f64]) -> f64 {
    if inner.is_empty() || outer.is_empty() {
        return f64::NAN;
    }
    let mut all: Vec<f64> = inner.iter().chain(outer).copied().collect();
    let ranks = stats::average_ranks(&all);
    all.clear();
    let rank_outer: f64 = ranks[inner.len()..].iter().sum();
    let n_in = inner.len() as f64;
    let n_out = outer.len() as f64;
    let u = rank_outer - n_out * (n_out + 1.0) / 2.0;
    u / (n_in * n_out)
}

/// `sd / |mean|`; zero when there is no spread. `NaN` for fewer than two
/// values or zero mean with nonzero spread.
pub fn relative_sd(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let s = stats::sd(&v);
    if s == 0.0 {
        return 0.0;
    }
    let m = stats::mean(&v).abs();
    if m == 0.0 {
        f64::NAN
    } else {
        s / m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationTables {
    pub fids: Vec<usize>,
    pub features: Vec<String>,
    /// Reference variability per `(fid, feature)`.
    pub reference: Vec<Vec<f64>>,
    /// `|reference - sampled|` per `(fid, feature)`; `NaN` where no sampled
    /// functions were supplied.
    pub difference: Vec<Vec<f64>>,
}

/// `sampled[t]` holds normalized feature rows of all functions sampled in
/// the run targeting `fids[t]`.
pub fn feature_deviation_tables(reference: &ReferenceSet, sampled: &[(usize, Vec<Vec<f64>>)]) -> DeviationTables {
    let sources = reference_sources(reference);
    let features: Vec<String> = reference.retained_names().iter().map(|s| s.to_string()).collect();
    let mut fids: Vec<usize> = sources.iter().map(|s| s.label).collect();
    fids.dedup();
    let nf = features.len();
    let mut table_a = Vec::new();
    let mut table_b = Vec::new();
    for &fid in &fids {
        let rows: Vec<&Vec<f64>> = sources.iter().filter(|s| s.label == fid).flat_map(|s| &s.replicates).collect();
        let a: Vec<f64> = (0..nf).map(|f| relative_sd(&rows.iter().map(|r| r[f]).collect::<Vec<_>>())).collect();
        let b: Vec<f64> = match sampled.iter().find(|(t, _)| *t == fid) {
            Some((_, gp_rows)) => {
                (0..nf).map(|f| (a[f] - relative_sd(&gp_rows.iter().map(|r| r[f]).collect::<Vec<_>>())).abs()).collect()
            }
            None => vec![f64::NAN; nf],
        };
        table_a.push(a);
        table_b.push(b);
    }
    DeviationTables { fids, features, reference: table_a, difference: table_b }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureInnerOuter {
    pub feature: String,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

/// Absolute differences of per-source mean normalized values, split by
/// whether the two sources share a label.
pub fn per_feature_inner_outer(sources: &[Source], names: &[&str]) -> Vec<FeatureInnerOuter> {
    let means: Vec<Vec<f64>> = sources.iter().map(Source::mean_vector).collect();
    let pairs = pair_indices(sources.len());
    names
        .iter()
        .enumerate()
        .map(|(f, name)| {
            let mut inner = Vec::new();
            let mut outer = Vec::new();
            for &(i, j) in &pairs {
                let d = (means[i][f] - means[j][f]).abs();
                if !d.is_finite() {
                    continue;
                }
                if sources[i].label == sources[j].label {
                    inner.push(d);
                } else {
                    outer.push(d);
                }
            }
            FeatureInnerOuter { feature: name.to_string(), inner, outer }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(label: usize, reps: Vec<Vec<f64>>) -> Source {
        Source { label, id: format!("s{label}"), replicates: reps }
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.0, 0.1], &[0.5, 0.9]), 1.0);
        assert_eq!(auc(&[0.9], &[0.1, 0.2]), 0.0);
        assert_eq!(auc(&[0.5], &[0.5]), 0.5);
        // Brute force on a mixed case.
        let inner = [0.1, 0.4, 0.4, 0.7];
        let outer = [0.2, 0.4, 0.8];
        let mut wins = 0.0;
        for a in inner {
            for b in outer {
                wins += if a < b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        assert!((auc(&inner, &outer) - wins / 12.0).abs() < 1e-12);
    }

    #[test]
    fn pair_counts() {
        let sources: Vec<Source> = (0..120).map(|i| src(i / 5, vec![vec![i as f64 + 1.0, 1.0]])).collect();
        let d = pairwise_distances(DistanceMetric::Euclidean, &sources);
        let io = split_inner_outer(DistanceMetric::Euclidean, &sources, &d);
        assert_eq!(io.inner.len(), 24 * 10);
        assert_eq!(io.outer.len(), 120 * 119 / 2 - 240);
        let single: Vec<Source> = (0..5).map(|i| src(7, vec![vec![i as f64 + 1.0]])).collect();
        let d = pairwise_distances(DistanceMetric::Cityblock, &single);
        assert!(split_inner_outer(DistanceMetric::Cityblock, &single, &d).outer.is_empty());
    }

    #[test]
    fn kendall_properties() {
        let a = vec![0.1, 0.5, 0.3, 0.9, 0.7];
        let sq: Vec<f64> = a.iter().map(|v| v * v).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let m = kendall_tau_matrix(&[a, sq, neg]);
        assert_eq!(m[0][0], 1.0);
        assert!((m[0][1] - 1.0).abs() < 1e-12);
        assert!((m[0][2] + 1.0).abs() < 1e-12);
        assert_eq!(m[1][2], m[2][1]);
    }

    #[test]
    fn relative_sd_rules() {
        assert_eq!(relative_sd(&[2.0, 2.0, 2.0]), 0.0);
        assert!((relative_sd(&[1.0, 3.0]) - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(relative_sd(&[-1.0, 1.0]).is_nan());
    }

    #[test]
    fn duplicated_sources_have_zero_inner_diffs() {
        let s = vec![src(1, vec![vec![0.2, 0.4]]), src(1, vec![vec![0.2, 0.4]]), src(2, vec![vec![0.5, 0.1]])];
        let out = per_feature_inner_outer(&s, &["a", "b"]);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|f| f.inner.iter().all(|&d| d == 0.0)));
        assert!((out[0].outer[0] - 0.3).abs() < 1e-12);
    }
}
