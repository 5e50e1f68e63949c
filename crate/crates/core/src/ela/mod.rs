//! Landscape features of an evaluated sample.
//!
//! All features are computed from a fixed set of `(point, objective)` pairs
//! without further function evaluations. Any feature that cannot be
//! computed on a given sample is reported as `NaN`; the vector as a whole
//! only fails when nothing could be computed.

mod disp;
mod distr;
mod ic;
mod level;
mod meta;
mod nbc;

use crate::rng::{self, tag};
use crate::sampling::{DoeDesign, Points};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const NUM_FEATURES: usize = 39;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
    "ela_level.mmce_lda_10",
    "ela_level.mmce_qda_10",
    "ela_level.lda_qda_10",
    "ela_level.mmce_lda_25",
    "ela_level.mmce_qda_25",
    "ela_level.lda_qda_25",
    "ela_level.mmce_lda_50",
    "ela_level.mmce_qda_50",
    "ela_level.lda_qda_50",
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
    "disp.ratio_mean_02",
    "disp.ratio_mean_05",
    "disp.ratio_mean_10",
    "disp.ratio_mean_25",
    "disp.ratio_median_02",
    "disp.ratio_median_05",
    "disp.ratio_median_10",
    "disp.ratio_median_25",
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
];

/// Cap applied to `ela_meta.quad_simple.cond` when the smallest quadratic
/// coefficient vanishes.
pub const COND_CAP: f64 = 1e12;
pub const FLAG_COND_CAPPED: &str = "ela_meta.quad_simple.cond:capped";

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ElaError {
    #[error("objective is constant over the sample")]
    DegenerateObjective,
    #[error("objective contains non-finite values")]
    NonFiniteObjective,
    #[error("need more than d+2 = {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points and objective lengths differ ({points} vs {values})")]
    LengthMismatch { points: usize, values: usize },
    #[error("every feature failed")]
    AllFeaturesFailed,
    #[error("replicate {replicate} failed: {source}")]
    ElaComputationFailed {
        replicate: usize,
        #[source]
        source: Box<ElaError>,
    },
}

/// Feature values aligned with [`FEATURE_NAMES`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    flags: Vec<String>,
}

impl FeatureVector {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert_eq!(values.len(), NUM_FEATURES, "feature vector length");
        FeatureVector { values, flags: Vec::new() }
    }

    pub fn with_flags(values: Vec<f64>, flags: Vec<String>) -> Self {
        FeatureVector { flags, ..Self::from_values(values) }
    }

    pub fn nan() -> Self {
        Self::from_values(vec![f64::NAN; NUM_FEATURES])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    /// Names of features that could not be computed.
    pub fn failures(&self) -> Vec<&'static str> {
        FEATURE_NAMES.iter().zip(&self.values).filter(|(_, v)| v.is_nan()).map(|(n, _)| *n).collect()
    }

    fn set(&mut self, name: &str, value: f64) {
        let i = feature_index(name).unwrap_or_else(|| panic!("unknown feature {name}"));
        self.values[i] = value;
    }
}

/// One feature vector per bootstrap replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElaSample {
    pub source: String,
    pub replicates: Vec<FeatureVector>,
}

impl ElaSample {
    /// `replicate x feature` values of one feature.
    pub fn feature_values(&self, index: usize) -> Vec<f64> {
        self.replicates.iter().map(|r| r.values[index]).collect()
    }

    /// Per-feature mean over replicates.
    pub fn mean_vector(&self) -> Vec<f64> {
        (0..NUM_FEATURES).map(|i| crate::stats::mean(&self.feature_values(i))).collect()
    }
}

/// Min-max scaling to `[0, 1]`.
pub fn normalize_objective(y: &[f64]) -> Result<Vec<f64>, ElaError> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ElaError::NonFiniteObjective);
    }
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if y.is_empty() || hi <= lo {
        return Err(ElaError::DegenerateObjective);
    }
    let span = hi - lo;
    if !span.is_finite() {
        return Err(ElaError::NonFiniteObjective);
    }
    Ok(y.iter().map(|v| (v - lo) / span).collect())
}

/// Pairwise Euclidean distances, row-major `m x m`.
pub(crate) struct DistanceMatrix {
    m: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub(crate) fn new(points: &Points) -> Self {
        let m = points.len();
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            let a = points.row(i);
            for j in (i + 1)..m {
                let d = a.iter().zip(points.row(j)).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                data[i * m + j] = d;
                data[j * m + i] = d;
            }
        }
        DistanceMatrix { m, data }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub(crate) fn len(&self) -> usize {
        self.m
    }
}

/// Computes every feature on `(points, y)`; `y` should already be
/// normalized. `seed` drives the cross-validation folds.
pub fn compute_features(points: &Points, y: &[f64], seed: u64) -> Result<FeatureVector, ElaError> {
    let m = points.len();
    let d = points.dim();
    if y.len() != m {
        return Err(ElaError::LengthMismatch { points: m, values: y.len() });
    }
    if m <= d + 2 {
        return Err(ElaError::TooFewPoints { needed: d + 3, got: m });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ElaError::NonFiniteObjective);
    }
    let mut fv = FeatureVector::nan();
    distr::compute(y, &mut fv);
    meta::compute(points, y, &mut fv);
    let mut cv_rng = rng::stream(seed, &[tag::CV_FOLDS]);
    level::compute(points, y, &mut cv_rng, &mut fv);
    let dist = DistanceMatrix::new(points);
    nbc::compute(&dist, y, &mut fv);
    disp::compute(&dist, y, &mut fv);
    ic::compute(points, &dist, y, &mut fv);
    if fv.values.iter().all(|v| v.is_nan()) {
        return Err(ElaError::AllFeaturesFailed);
    }
    Ok(fv)
}

/// Features of one replicate: subset, normalize, compute.
pub fn compute_replicate(points: &Points, y: &[f64], indices: &[usize], seed: u64) -> Result<FeatureVector, ElaError> {
    let sub = points.select(indices);
    let ys: Vec<f64> = indices.iter().map(|&i| y[i]).collect();
    let yn = normalize_objective(&ys)?;
    compute_features(&sub, &yn, seed)
}

/// Feature vectors of every bootstrap set of `design` for objective `y`.
/// A constant or non-finite `y` is reported as such before any replicate
/// is computed.
pub fn compute_ela_sample(design: &DoeDesign, y: &[f64], source: impl Into<String>) -> Result<ElaSample, ElaError> {
    if y.len() != design.len() {
        return Err(ElaError::LengthMismatch { points: design.len(), values: y.len() });
    }
    normalize_objective(y)?;
    let replicates = design
        .bootstraps
        .par_iter()
        .enumerate()
        .map(|(rep, idx)| {
            compute_replicate(&design.points, y, idx, rng::derive_seed(design.seed, &[tag::CV_FOLDS, rep as u64]))
                .map_err(|e| ElaError::ElaComputationFailed { replicate: rep, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ElaSample { source: source.into(), replicates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster() {
        assert_eq!(FEATURE_NAMES.len(), NUM_FEATURES);
        let mut sorted = FEATURE_NAMES.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), NUM_FEATURES);
        assert_eq!(feature_index("ic.m0"), Some(38));
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_objective(&[0.0, 5.0, 10.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_objective(&[0.0, 0.25, 1.0]).unwrap(), vec![0.0, 0.25, 1.0]);
        assert_eq!(normalize_objective(&[2.0, 2.0]), Err(ElaError::DegenerateObjective));
        assert_eq!(normalize_objective(&[2.0, f64::NAN]), Err(ElaError::NonFiniteObjective));
    }

    #[test]
    fn too_few_points() {
        let p = Points::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(compute_features(&p, &[0.0, 0.2, 0.5, 1.0], 0), Err(ElaError::TooFewPoints { needed: 5, got: 4 }));
    }
}
