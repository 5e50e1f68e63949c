//! Feature space: reference bounds, feature filtering, target profiles,
//! fitness and the distance studies.

pub mod analysis;
pub mod metrics;
pub mod wasserstein;

pub use metrics::{vector_distance, DistanceMetric};
pub use wasserstein::wasserstein_1d;

use crate::bbob::{BbobError, BbobInstance, NUM_FUNCTIONS};
use crate::ela::{self, ElaError, ElaSample, FEATURE_NAMES, NUM_FEATURES};
use crate::sampling::{DoeDesign, SamplingError};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CORRELATION_THRESHOLD: f64 = 0.95;
pub const REFERENCE_INSTANCES: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains non-finite values")]
    NonFiniteSample,
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("distance undefined: {0}")]
    UndefinedDistance(&'static str),
    #[error("invalid distance: feature {feature} is missing")]
    InvalidDistance { feature: String },
    #[error("reference is for dimension {reference}, got {got}")]
    DimensionMismatch { reference: usize, got: usize },
    #[error("target f{0} is not part of the reference corpus")]
    UnknownTarget(usize),
    #[error(transparent)]
    Bbob(#[from] BbobError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("f{fid} instance {iid}: {source}")]
    Ela {
        fid: usize,
        iid: usize,
        #[source]
        source: ElaError,
    },
}

/// Features of one benchmark instance in the reference corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub fid: usize,
    pub iid: usize,
    pub sample: ElaSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub dim: usize,
    pub design_seed: u64,
    pub threshold: f64,
    /// Per-feature bounds over the finite corpus values, for all features.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub retained: Vec<bool>,
    pub corpus: Vec<ReferenceEntry>,
}

/// Computes the feature samples of every reference instance.
pub fn reference_corpus(design: &DoeDesign) -> Result<Vec<ReferenceEntry>, SpaceError> {
    let dim = design.dim();
    let keys: Vec<(usize, usize)> =
        (1..=NUM_FUNCTIONS).flat_map(|f| REFERENCE_INSTANCES.iter().map(move |&i| (f, i))).collect();
    keys.par_iter()
        .map(|&(fid, iid)| {
            let inst = BbobInstance::new(fid, iid, dim)?;
            let y = inst.evaluate_batch(&design.points);
            let sample = ela::compute_ela_sample(design, &y, format!("f{fid}_i{iid}"))
                .map_err(|source| SpaceError::Ela { fid, iid, source })?;
            Ok(ReferenceEntry { fid, iid, sample })
        })
        .collect()
}

pub fn build_reference(dim: usize, design_seed: u64, threshold: f64) -> Result<ReferenceSet, SpaceError> {
    let design = DoeDesign::new(dim, design_seed)?;
    let corpus = reference_corpus(&design)?;
    Ok(ReferenceSet::from_corpus(dim, design_seed, threshold, corpus))
}

impl ReferenceSet {
    pub fn from_corpus(dim: usize, design_seed: u64, threshold: f64, corpus: Vec<ReferenceEntry>) -> Self {
        let columns = corpus_columns(&corpus);
        let mut min = vec![f64::NAN; NUM_FEATURES];
        let mut max = vec![f64::NAN; NUM_FEATURES];
        let mut usable = [false; NUM_FEATURES];
        for (k, col) in columns.iter().enumerate() {
            let finite: Vec<f64> = col.iter().copied().filter(|v| v.is_finite()).collect();
            if finite.is_empty() {
                continue;
            }
            min[k] = finite.iter().copied().fold(f64::INFINITY, f64::min);
            max[k] = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            usable[k] = max[k] > min[k];
        }
        let candidates: Vec<usize> = (0..NUM_FEATURES).filter(|&k| usable[k]).collect();
        let cols: Vec<Vec<f64>> = candidates.iter().map(|&k| columns[k].clone()).collect();
        let names: Vec<&str> = candidates.iter().map(|&k| FEATURE_NAMES[k]).collect();
        let keep = filter_correlated(&cols, &names, threshold);
        let mut retained = vec![false; NUM_FEATURES];
        for (&k, keep) in candidates.iter().zip(keep) {
            retained[k] = keep;
        }
        ReferenceSet { dim, design_seed, threshold, min, max, retained, corpus }
    }

    pub fn retained_indices(&self) -> Vec<usize> {
        (0..NUM_FEATURES).filter(|&k| self.retained[k]).collect()
    }

    pub fn retained_names(&self) -> Vec<&'static str> {
        self.retained_indices().into_iter().map(|k| FEATURE_NAMES[k]).collect()
    }

    /// Min-max scaled retained features, unclamped.
    pub fn normalize(&self, raw: &[f64]) -> Vec<f64> {
        self.retained_indices().into_iter().map(|k| (raw[k] - self.min[k]) / (self.max[k] - self.min[k])).collect()
    }

    /// Normalized replicates, `replicate x retained feature`.
    pub fn normalize_sample(&self, sample: &ElaSample) -> Vec<Vec<f64>> {
        sample.replicates.iter().map(|r| self.normalize(r.values())).collect()
    }

    pub fn entries_for(&self, fid: usize) -> impl Iterator<Item = &ReferenceEntry> {
        self.corpus.iter().filter(move |e| e.fid == fid)
    }
}

/// Raw corpus columns, one per feature, over all `(instance, replicate)`
/// rows.
pub fn corpus_columns(corpus: &[ReferenceEntry]) -> Vec<Vec<f64>> {
    (0..NUM_FEATURES).map(|k| corpus.iter().flat_map(|e| e.sample.feature_values(k)).collect()).collect()
}

/// Spearman correlation over rows where both columns are finite; `NaN`
/// when fewer than three such rows exist or a column is constant there.
fn pairwise_spearman(a: &[f64], b: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) =
        a.iter().zip(b).filter(|(p, q)| p.is_finite() && q.is_finite()).map(|(p, q)| (*p, *q)).unzip();
    if x.len() < 3 {
        return f64::NAN;
    }
    stats::spearman(&x, &y)
}

/// Greedy removal of highly rank-correlated features. Pairs above
/// `threshold` are visited from most to least correlated; of each pair
/// still fully retained, the feature with the larger mean absolute
/// correlation to all others is dropped (ties: the later name).
pub fn filter_correlated(columns: &[Vec<f64>], names: &[&str], threshold: f64) -> Vec<bool> {
    let k = columns.len();
    assert_eq!(k, names.len());
    let mut rho = vec![vec![0.0; k]; k];
    for i in 0..k {
        rho[i][i] = 1.0;
        for j in (i + 1)..k {
            let r = pairwise_spearman(&columns[i], &columns[j]).abs();
            let r = if r.is_nan() { 0.0 } else { r };
            rho[i][j] = r;
            rho[j][i] = r;
        }
    }
    let mean_abs: Vec<f64> = (0..k)
        .map(|i| if k < 2 { 0.0 } else { (0..k).filter(|&j| j != i).map(|j| rho[i][j]).sum::<f64>() / (k - 1) as f64 })
        .collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if rho[i][j] > threshold {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_by(|&(a, b), &(c, d)| {
        rho[c][d].total_cmp(&rho[a][b]).then_with(|| (names[a], names[b]).cmp(&(names[c], names[d])))
    });
    let mut keep = vec![true; k];
    for (i, j) in pairs {
        if !(keep[i] && keep[j]) {
            continue;
        }
        let drop = match mean_abs[i].total_cmp(&mean_abs[j]) {
            std::cmp::Ordering::Greater => i,
            std::cmp::Ordering::Less => j,
            std::cmp::Ordering::Equal => {
                if names[i] > names[j] {
                    i
                } else {
                    j
                }
            }
        };
        keep[drop] = false;
    }
    keep
}

/// Normalized feature values of a target function over its reference
/// instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetProfile {
    pub fid: usize,
    pub dim: usize,
    /// Retained feature -> pooled finite values (instances x replicates).
    pub pooled: Vec<Vec<f64>>,
    /// Retained feature -> instance -> finite replicate values.
    pub per_instance: Vec<Vec<Vec<f64>>>,
    /// Retained feature -> excluded non-finite entries.
    pub excluded: Vec<usize>,
}

impl TargetProfile {
    pub fn from_reference(reference: &ReferenceSet, fid: usize) -> Result<Self, SpaceError> {
        let entries: Vec<&ReferenceEntry> = reference.entries_for(fid).collect();
        if entries.is_empty() {
            return Err(SpaceError::UnknownTarget(fid));
        }
        let normalized: Vec<Vec<Vec<f64>>> = entries.iter().map(|e| reference.normalize_sample(&e.sample)).collect();
        let nret = reference.retained_indices().len();
        let mut pooled = vec![Vec::new(); nret];
        let mut per_instance = vec![Vec::new(); nret];
        let mut excluded = vec![0; nret];
        for f in 0..nret {
            for inst in &normalized {
                let vals: Vec<f64> = inst.iter().map(|r| r[f]).collect();
                let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
                excluded[f] += vals.len() - finite.len();
                pooled[f].extend_from_slice(&finite);
                per_instance[f].push(finite);
            }
        }
        Ok(TargetProfile { fid, dim: reference.dim, pooled, per_instance, excluded })
    }

    /// Per-feature mean of the pooled values.
    pub fn mean_vector(&self) -> Vec<f64> {
        self.pooled.iter().map(|v| stats::mean(v)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// One distance per feature against all target values pooled.
    #[default]
    Pooled,
    /// Average of per-instance distances.
    PerInstance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitnessOptions {
    pub mode: FitnessMode,
    /// Per retained feature; `None` means equal weights.
    pub weights: Option<Vec<f64>>,
}

/// Weighted mean over retained features of the Wasserstein distance
/// between candidate replicates and target values. `candidate` is
/// `replicate x retained feature`, already normalized.
pub fn fitness(
    candidate: &[Vec<f64>],
    target: &TargetProfile,
    reference: &ReferenceSet,
    options: &FitnessOptions,
) -> Result<f64, SpaceError> {
    let names = reference.retained_names();
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (f, name) in names.iter().enumerate() {
        let values: Vec<f64> = candidate.iter().map(|r| r[f]).collect();
        let missing = || SpaceError::InvalidDistance { feature: name.to_string() };
        if values.iter().any(|v| !v.is_finite()) || target.pooled[f].is_empty() {
            return Err(missing());
        }
        let d = match options.mode {
            FitnessMode::Pooled => wasserstein_1d(&values, &target.pooled[f]).map_err(|_| missing())?,
            FitnessMode::PerInstance => {
                let per: Vec<f64> = target.per_instance[f]
                    .iter()
                    .filter(|inst| !inst.is_empty())
                    .map(|inst| wasserstein_1d(&values, inst))
                    .collect::<Result<_, _>>()
                    .map_err(|_| missing())?;
                stats::mean(&per)
            }
        };
        let w = options.weights.as_ref().map_or(1.0, |w| w[f]);
        total += w * d;
        weight_sum += w;
    }
    if weight_sum <= 0.0 {
        return Err(SpaceError::UndefinedDistance("no retained features"));
    }
    Ok(total / weight_sum)
}

/// Fitness of a raw feature sample against `target`.
pub fn sample_fitness(
    sample: &ElaSample,
    target: &TargetProfile,
    reference: &ReferenceSet,
    options: &FitnessOptions,
) -> Result<f64, SpaceError> {
    fitness(&reference.normalize_sample(sample), target, reference, options)
}
