//! Least-squares meta-models.

use super::{FeatureVector, COND_CAP, FLAG_COND_CAPPED};
use crate::sampling::Points;
use nalgebra::{DMatrix, DVector};

const COEF_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Model {
    Linear,
    LinearInteract,
    Quadratic,
    QuadraticInteract,
}

impl Model {
    fn columns(self, d: usize) -> usize {
        let inter = d * (d.saturating_sub(1)) / 2;
        match self {
            Model::Linear => 1 + d,
            Model::LinearInteract => 1 + d + inter,
            Model::Quadratic => 1 + 2 * d,
            Model::QuadraticInteract => 1 + 2 * d + inter,
        }
    }

    fn row(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        out.extend_from_slice(x);
        if matches!(self, Model::Quadratic | Model::QuadraticInteract) {
            out.extend(x.iter().map(|v| v * v));
        }
        if matches!(self, Model::LinearInteract | Model::QuadraticInteract) {
            for i in 0..x.len() {
                for j in (i + 1)..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }
}

pub(crate) struct Fit {
    pub coefficients: Vec<f64>,
    pub adj_r2: f64,
}

pub(crate) fn fit(points: &Points, y: &[f64], model: Model) -> Option<Fit> {
    let m = points.len();
    let p = model.columns(points.dim());
    if m <= p {
        return None;
    }
    let mut row = Vec::with_capacity(p);
    let mut a = DMatrix::<f64>::zeros(m, p);
    for (i, x) in points.rows().enumerate() {
        model.row(x, &mut row);
        for (j, v) in row.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    let b = DVector::from_column_slice(y);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let resid = &b - &a * &coef;
    let ss_res = resid.norm_squared();
    let mean = b.mean();
    let ss_tot: f64 = b.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let r2 = 1.0 - ss_res / ss_tot;
    let predictors = (p - 1) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (m as f64 - 1.0) / (m as f64 - predictors - 1.0);
    Some(Fit { coefficients: coef.iter().copied().collect(), adj_r2 })
}

pub(super) fn compute(points: &Points, y: &[f64], fv: &mut FeatureVector) {
    let d = points.dim();
    if let Some(f) = fit(points, y, Model::Linear) {
        fv.set("ela_meta.lin_simple.adj_r2", f.adj_r2);
        fv.set("ela_meta.lin_simple.intercept", f.coefficients[0]);
        let abs: Vec<f64> = f.coefficients[1..].iter().map(|c| c.abs()).collect();
        let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = abs.iter().copied().fold(0.0, f64::max);
        fv.set("ela_meta.lin_simple.coef.min", lo);
        fv.set("ela_meta.lin_simple.coef.max", hi);
        if lo > 0.0 {
            fv.set("ela_meta.lin_simple.coef.max_by_min", hi / lo);
        }
    }
    if let Some(f) = fit(points, y, Model::LinearInteract) {
        fv.set("ela_meta.lin_w_interact.adj_r2", f.adj_r2);
    }
    if let Some(f) = fit(points, y, Model::Quadratic) {
        fv.set("ela_meta.quad_simple.adj_r2", f.adj_r2);
        let quad: Vec<f64> = f.coefficients[1 + d..1 + 2 * d].iter().map(|c| c.abs()).collect();
        let lo = quad.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = quad.iter().copied().fold(0.0, f64::max);
        if lo < COEF_FLOOR {
            fv.set("ela_meta.quad_simple.cond", COND_CAP);
            fv.flags.push(FLAG_COND_CAPPED.to_string());
        } else {
            fv.set("ela_meta.quad_simple.cond", (hi / lo).min(COND_CAP));
        }
    }
    if let Some(f) = fit(points, y, Model::QuadraticInteract) {
        fv.set("ela_meta.quad_w_interact.adj_r2", f.adj_r2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sobol_design;

    #[test]
    fn recovers_exact_coefficients() {
        let pts = sobol_design(3, 64, 1).unwrap();
        let y: Vec<f64> = pts.rows().map(|x| 0.5 + 2.0 * x[0] - x[1] + 0.25 * x[2] + 3.0 * x[0] * x[2]).collect();
        let f = fit(&pts, &y, Model::LinearInteract).unwrap();
        let want = [0.5, 2.0, -1.0, 0.25, 0.0, 3.0, 0.0];
        for (c, w) in f.coefficients.iter().zip(want) {
            assert!((c - w).abs() < 1e-9, "{c} vs {w}");
        }
        assert!((f.adj_r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn column_counts() {
        assert_eq!(Model::Linear.columns(2), 3);
        assert_eq!(Model::LinearInteract.columns(3), 7);
        assert_eq!(Model::Quadratic.columns(2), 5);
        assert_eq!(Model::QuadraticInteract.columns(4), 15);
    }

    #[test]
    fn underdetermined_fit_is_missing() {
        let pts = sobol_design(4, 10, 1).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(fit(&pts, &y, Model::QuadraticInteract).is_none());
    }
}
