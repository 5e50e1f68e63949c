//! Level-set features: how well linear and quadratic discriminants
//! separate the points below an objective quantile from the rest.

use super::FeatureVector;
use crate::sampling::Points;
use crate::stats;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

pub(crate) const QUANTILES: [(f64, &str); 3] = [(0.10, "10"), (0.25, "25"), (0.50, "50")];
pub(crate) const FOLDS: usize = 5;
pub(crate) const RIDGE: f64 = 1e-8;
/// Classes smaller than this make the features undefined.
pub(crate) const MIN_CLASS_SIZE: usize = FOLDS;

pub(super) fn compute(points: &Points, y: &[f64], rng: &mut impl Rng, fv: &mut FeatureVector) {
    for (q, tag) in QUANTILES {
        let labels = level_labels(y, q);
        let Some((lda, qda)) = cross_validated_errors(points, &labels, rng) else {
            continue;
        };
        fv.set(&format!("ela_level.mmce_lda_{tag}"), lda);
        fv.set(&format!("ela_level.mmce_qda_{tag}"), qda);
        fv.set(&format!("ela_level.lda_qda_{tag}"), lda_qda_ratio(lda, qda, y.len()));
    }
}

/// `true` for points at or below the `q`-quantile of `y`.
pub(crate) fn level_labels(y: &[f64], q: f64) -> Vec<bool> {
    let threshold = stats::quantile(y, q);
    y.iter().map(|&v| v <= threshold).collect()
}

/// Ratio of the two error rates. A perfect quadratic classifier is given
/// one misclassification's worth of error so the ratio stays finite.
pub(crate) fn lda_qda_ratio(lda: f64, qda: f64, m: usize) -> f64 {
    if lda == 0.0 && qda == 0.0 {
        1.0
    } else {
        lda / qda.max(1.0 / m as f64)
    }
}

/// Stratified fold assignment.
pub(crate) fn stratified_folds(labels: &[bool], folds: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut assignment = vec![0; labels.len()];
    // The second class continues the round-robin where the first stopped,
    // keeping fold sizes within one of each other.
    let mut next = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Misclassification rates of LDA and QDA. `None` if either class is too
/// small or a covariance cannot be factorized.
pub(crate) fn cross_validated_errors(points: &Points, labels: &[bool], rng: &mut impl Rng) -> Option<(f64, f64)> {
    let positives = labels.iter().filter(|&&l| l).count();
    if positives < MIN_CLASS_SIZE || labels.len() - positives < MIN_CLASS_SIZE {
        return None;
    }
    let folds = stratified_folds(labels, FOLDS, rng);
    let (mut lda_err, mut qda_err) = (0usize, 0usize);
    for f in 0..FOLDS {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
        let model = Discriminant::fit(points, labels, &train)?;
        for &i in &test {
            let x = DVector::from_column_slice(points.row(i));
            lda_err += (model.predict_lda(&x) != labels[i]) as usize;
            qda_err += (model.predict_qda(&x) != labels[i]) as usize;
        }
    }
    let m = labels.len() as f64;
    Some((lda_err as f64 / m, qda_err as f64 / m))
}

struct ClassModel {
    mean: DVector<f64>,
    log_prior: f64,
    /// Cholesky factor of the (ridged) class covariance.
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
}

pub(crate) struct Discriminant {
    classes: [ClassModel; 2],
    pooled: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

fn log_det(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

impl Discriminant {
    pub(crate) fn fit(points: &Points, labels: &[bool], train: &[usize]) -> Option<Self> {
        let d = points.dim();
        let n = train.len() as f64;
        let mut pooled = DMatrix::<f64>::zeros(d, d);
        let mut build = |class: bool| -> Option<ClassModel> {
            let idx: Vec<usize> = train.iter().copied().filter(|&i| labels[i] == class).collect();
            if idx.len() < 2 {
                return None;
            }
            let k = idx.len() as f64;
            let mut mean = DVector::<f64>::zeros(d);
            for &i in &idx {
                mean += DVector::from_column_slice(points.row(i));
            }
            mean /= k;
            let mut scatter = DMatrix::<f64>::zeros(d, d);
            for &i in &idx {
                let c = DVector::from_column_slice(points.row(i)) - &mean;
                scatter += &c * c.transpose();
            }
            pooled += &scatter;
            let cov = scatter / (k - 1.0) + DMatrix::identity(d, d) * RIDGE;
            let chol = cov.cholesky()?;
            let ld = log_det(&chol);
            Some(ClassModel { mean, log_prior: (k / n).ln(), chol, log_det: ld })
        };
        let pos = build(true)?;
        let neg = build(false)?;
        let pooled = (pooled / (n - 2.0) + DMatrix::identity(d, d) * RIDGE).cholesky()?;
        Some(Discriminant { classes: [pos, neg], pooled })
    }

    fn predict_lda(&self, x: &DVector<f64>) -> bool {
        let score = |c: &ClassModel| {
            let w = self.pooled.solve(&c.mean);
            x.dot(&w) - 0.5 * c.mean.dot(&w) + c.log_prior
        };
        score(&self.classes[0]) >= score(&self.classes[1])
    }

    fn predict_qda(&self, x: &DVector<f64>) -> bool {
        let score = |c: &ClassModel| {
            let diff = x - &c.mean;
            let sol = c.chol.solve(&diff);
            -0.5 * c.log_det - 0.5 * diff.dot(&sol) + c.log_prior
        };
        score(&self.classes[0]) >= score(&self.classes[1])
    }
}
