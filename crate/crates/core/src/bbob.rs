//! The 24 noiseless single-objective benchmark functions.
//!
//! Instances are generated from `(fid, iid, dim)`: a uniformly drawn
//! optimum location, an optimum value in `[-100, 100]` and random
//! orthogonal rotations. The raw formulas follow the standard definitions;
//! the instance pipeline is a self-contained stand-in and is not bit
//! compatible with the reference platform.

use crate::rng::{self, tag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const NUM_FUNCTIONS: usize = 24;
pub const F_OPT_RANGE: (f64, f64) = (-100.0, 100.0);
/// Optima of the shifted functions are drawn from this box.
pub const X_OPT_BOUND: f64 = 4.0;

pub const FUNCTION_NAMES: [&str; NUM_FUNCTIONS] = [
    "sphere",
    "ellipsoidal",
    "rastrigin",
    "buche_rastrigin",
    "linear_slope",
    "attractive_sector",
    "step_ellipsoidal",
    "rosenbrock",
    "rosenbrock_rotated",
    "ellipsoidal_rotated",
    "discus",
    "bent_cigar",
    "sharp_ridge",
    "different_powers",
    "rastrigin_rotated",
    "weierstrass",
    "schaffers_f7",
    "schaffers_f7_ill_conditioned",
    "griewank_rosenbrock",
    "schwefel",
    "gallagher_101",
    "gallagher_21",
    "katsuura",
    "lunacek_bi_rastrigin",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BbobError {
    #[error("unknown function id {0} (expected 1..=24)")]
    UnknownFunction(usize),
    #[error("instance id must be positive")]
    BadInstance,
    #[error("dimension must be at least 2, got {0}")]
    BadDimension(usize),
}

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &vi) in self.data.chunks_exact(self.n).zip(v) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
        out
    }

    /// Orthogonal matrix from modified Gram-Schmidt on a Gaussian matrix.
    pub fn random_rotation(n: usize, rng: &mut impl Rng) -> Self {
        let mut rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        for i in 0..n {
            for j in 0..i {
                let (done, rest) = rows.split_at_mut(i);
                let proj: f64 = rest[0].iter().zip(&done[j]).map(|(a, b)| a * b).sum();
                for (a, b) in rest[0].iter_mut().zip(&done[j]) {
                    *a -= proj * b;
                }
            }
            let norm = rows[i].iter().map(|a| a * a).sum::<f64>().sqrt();
            rows[i].iter_mut().for_each(|a| *a /= norm);
        }
        Matrix { n, data: rows.concat() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Peak {
    center: Vec<f64>,
    weight: f64,
    /// Diagonal of the (already scaled) curvature matrix.
    curvature: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbobInstance {
    pub fid: usize,
    pub iid: usize,
    pub dim: usize,
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    rotation_r: Matrix,
    rotation_q: Matrix,
    peaks: Vec<Peak>,
    /// Raw value at `x_opt`, subtracted so the optimum value is exact.
    offset: f64,
}

fn lambda(alpha: f64, d: usize) -> Vec<f64> {
    (0..d).map(|i| alpha.powf(0.5 * ratio(i, d))).collect()
}

fn ratio(i: usize, d: usize) -> f64 {
    i as f64 / (d - 1) as f64
}

fn scale(diag: &[f64], v: &[f64]) -> Vec<f64> {
    diag.iter().zip(v).map(|(a, b)| a * b).collect()
}

fn t_osz_scalar(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xh = x.abs().ln();
    let (c1, c2) = if x > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    x.signum() * (xh + 0.049 * ((c1 * xh).sin() + (c2 * xh).sin())).exp()
}

fn t_osz(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| t_osz_scalar(x)).collect()
}

fn t_asy(v: &[f64], beta: f64) -> Vec<f64> {
    let d = v.len();
    v.iter().enumerate().map(|(i, &x)| if x > 0.0 { x.powf(1.0 + beta * ratio(i, d) * x.sqrt()) } else { x }).collect()
}

fn f_pen(x: &[f64]) -> f64 {
    x.iter().map(|&v| (v.abs() - 5.0).max(0.0).powi(2)).sum()
}

fn rastrigin_sum(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    10.0 * (d - z.iter().map(|&v| (2.0 * PI * v).cos()).sum::<f64>()) + z.iter().map(|v| v * v).sum::<f64>()
}

fn rosenbrock_sum(z: &[f64]) -> f64 {
    z.windows(2).map(|w| 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2)).sum()
}

fn rosenbrock_factor(d: usize) -> f64 {
    1f64.max((d as f64).sqrt() / 8.0)
}

fn diff(x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter().zip(c).map(|(a, b)| a - b).collect()
}

fn random_signs(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn uniform_vec(d: usize, bound: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-bound..=bound)).collect()
}

const SCHWEFEL_OPT: f64 = 4.2096874633;
const LUNACEK_MU0: f64 = 2.5;

impl BbobInstance {
    pub fn new(fid: usize, iid: usize, dim: usize) -> Result<Self, BbobError> {
        if !(1..=NUM_FUNCTIONS).contains(&fid) {
            return Err(BbobError::UnknownFunction(fid));
        }
        if iid == 0 {
            return Err(BbobError::BadInstance);
        }
        if dim < 2 {
            return Err(BbobError::BadDimension(dim));
        }
        let mut rng = rng::stream(0, &[tag::BBOB, fid as u64, iid as u64, dim as u64]);
        let f_opt = rng.random_range(F_OPT_RANGE.0..=F_OPT_RANGE.1);
        let rotation_r = Matrix::random_rotation(dim, &mut rng);
        let rotation_q = Matrix::random_rotation(dim, &mut rng);
        let mut x_opt = uniform_vec(dim, X_OPT_BOUND, &mut rng);
        let mut peaks = Vec::new();
        match fid {
            4 => {
                // Even (0-based) coordinates carry the asymmetric penalty
                // and get a positive optimum.
                for v in x_opt.iter_mut().step_by(2) {
                    *v = v.abs();
                }
            }
            5 => x_opt = random_signs(dim, &mut rng).into_iter().map(|s| 5.0 * s).collect(),
            8 => x_opt.iter_mut().for_each(|v| *v *= 0.75),
            9 | 19 => {
                let c = rosenbrock_factor(dim);
                x_opt = rotation_r.apply_transpose(&vec![0.5 / c; dim]);
            }
            20 => {
                x_opt = random_signs(dim, &mut rng).into_iter().map(|s| 0.5 * SCHWEFEL_OPT * s).collect();
            }
            21 | 22 => {
                let (count, top_alpha, bound, top_bound) =
                    if fid == 21 { (101usize, 1000.0, 5.0, 4.0) } else { (21usize, 1.0e6, 4.9, 3.92) };
                let others = count - 1;
                let mut alphas: Vec<f64> =
                    (0..others).map(|j| 1000f64.powf(2.0 * j as f64 / (others - 1) as f64)).collect();
                shuffle(&mut alphas, &mut rng);
                for p in 0..count {
                    let (alpha, center, weight) = if p == 0 {
                        (top_alpha, uniform_vec(dim, top_bound, &mut rng), 10.0)
                    } else {
                        let w = 1.1 + 8.0 * (p - 1) as f64 / (others - 1) as f64;
                        (alphas[p - 1], uniform_vec(dim, bound, &mut rng), w)
                    };
                    let mut diag = lambda(alpha, dim);
                    shuffle(&mut diag, &mut rng);
                    let norm = alpha.powf(0.25);
                    peaks.push(Peak { center, weight, curvature: diag.into_iter().map(|v| v / norm).collect() });
                }
                x_opt = peaks[0].center.clone();
            }
            24 => {
                x_opt = random_signs(dim, &mut rng).into_iter().map(|s| 0.5 * LUNACEK_MU0 * s).collect();
            }
            _ => {}
        }
        let mut inst = BbobInstance { fid, iid, dim, x_opt, f_opt, rotation_r, rotation_q, peaks, offset: 0.0 };
        inst.offset = inst.raw(&inst.x_opt.clone());
        Ok(inst)
    }

    pub fn name(&self) -> &'static str {
        FUNCTION_NAMES[self.fid - 1]
    }

    pub fn rotation_r(&self) -> &Matrix {
        &self.rotation_r
    }

    pub fn rotation_q(&self) -> &Matrix {
        &self.rotation_q
    }

    pub fn in_domain(point: &[f64]) -> bool {
        point.iter().all(|v| (-5.0..=5.0).contains(v))
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.dim, "point dimension mismatch");
        self.raw(point) - self.offset + self.f_opt
    }

    /// Value plus whether the point was inside `[-5, 5]^d`.
    pub fn evaluate_checked(&self, point: &[f64]) -> (f64, bool) {
        (self.evaluate(point), Self::in_domain(point))
    }

    pub fn evaluate_batch(&self, points: &crate::sampling::Points) -> Vec<f64> {
        points.rows().map(|r| self.evaluate(r)).collect()
    }

    fn raw(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let r = &self.rotation_r;
        let q = &self.rotation_q;
        let shifted = || diff(x, &self.x_opt);
        match self.fid {
            1 => shifted().iter().map(|v| v * v).sum(),
            2 => t_osz(&shifted()).iter().enumerate().map(|(i, z)| 10f64.powf(6.0 * ratio(i, d)) * z * z).sum(),
            3 => {
                let z = scale(&lambda(10.0, d), &t_asy(&t_osz(&shifted()), 0.2));
                rastrigin_sum(&z)
            }
            4 => {
                let z: Vec<f64> = t_osz(&shifted())
                    .into_iter()
                    .enumerate()
                    .map(|(i, z)| {
                        let base = 10f64.powf(0.5 * ratio(i, d));
                        if z > 0.0 && i % 2 == 0 {
                            10.0 * base * z
                        } else {
                            base * z
                        }
                    })
                    .collect();
                rastrigin_sum(&z) + 100.0 * f_pen(x)
            }
            5 => (0..d)
                .map(|i| {
                    let s = self.x_opt[i].signum() * 10f64.powf(ratio(i, d));
                    let z = if x[i] * self.x_opt[i] < 25.0 { x[i] } else { self.x_opt[i] };
                    5.0 * s.abs() - s * z
                })
                .sum(),
            6 => {
                let z = q.apply(&scale(&lambda(10.0, d), &r.apply(&shifted())));
                let s: f64 = z
                    .iter()
                    .zip(&self.x_opt)
                    .map(|(&zi, &xo)| {
                        let si = if zi * xo > 0.0 { 100.0 } else { 1.0 };
                        (si * zi).powi(2)
                    })
                    .sum();
                t_osz_scalar(s).powf(0.9)
            }
            7 => {
                let zh = scale(&lambda(10.0, d), &r.apply(&shifted()));
                let zt: Vec<f64> = zh
                    .iter()
                    .map(|&v| if v.abs() > 0.5 { (0.5 + v).floor() } else { (0.5 + 10.0 * v).floor() / 10.0 })
                    .collect();
                let z = q.apply(&zt);
                let s: f64 = z.iter().enumerate().map(|(i, v)| 10f64.powf(2.0 * ratio(i, d)) * v * v).sum();
                0.1 * (zh[0].abs() / 1e4).max(s) + f_pen(x)
            }
            8 => {
                let c = rosenbrock_factor(d);
                let z: Vec<f64> = shifted().iter().map(|v| c * v + 1.0).collect();
                rosenbrock_sum(&z)
            }
            9 => {
                let c = rosenbrock_factor(d);
                let z: Vec<f64> = r.apply(x).iter().map(|v| c * v + 0.5).collect();
                rosenbrock_sum(&z)
            }
            10 => {
                t_osz(&r.apply(&shifted())).iter().enumerate().map(|(i, z)| 10f64.powf(6.0 * ratio(i, d)) * z * z).sum()
            }
            11 => {
                let z = t_osz(&r.apply(&shifted()));
                1e6 * z[0] * z[0] + z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            12 => {
                let z = r.apply(&t_asy(&r.apply(&shifted()), 0.5));
                z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            13 => {
                let z = q.apply(&scale(&lambda(10.0, d), &r.apply(&shifted())));
                z[0] * z[0] + 100.0 * z[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            14 => {
                let z = r.apply(&shifted());
                z.iter().enumerate().map(|(i, v)| v.abs().powf(2.0 + 4.0 * ratio(i, d))).sum::<f64>().sqrt()
            }
            15 => {
                let inner = t_asy(&t_osz(&r.apply(&shifted())), 0.2);
                let z = r.apply(&scale(&lambda(10.0, d), &q.apply(&inner)));
                rastrigin_sum(&z)
            }
            16 => {
                let z = r.apply(&scale(&lambda(0.01, d), &q.apply(&t_osz(&r.apply(&shifted())))));
                let f0: f64 = (0..12).map(|k| 0.5f64.powi(k) * (PI * 3f64.powi(k)).cos()).sum();
                let s: f64 = z
                    .iter()
                    .map(|&zi| {
                        (0..12).map(|k| 0.5f64.powi(k) * (2.0 * PI * 3f64.powi(k) * (zi + 0.5)).cos()).sum::<f64>()
                    })
                    .sum();
                10.0 * (s / d as f64 - f0).powi(3) + 10.0 / d as f64 * f_pen(x)
            }
            17 | 18 => {
                let cond = if self.fid == 17 { 10.0 } else { 1000.0 };
                let z = scale(&lambda(cond, d), &q.apply(&t_asy(&r.apply(&shifted()), 0.5)));
                let mean: f64 = z
                    .windows(2)
                    .map(|w| {
                        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
                        s.sqrt() + s.sqrt() * (50.0 * s.powf(0.2)).sin().powi(2)
                    })
                    .sum::<f64>()
                    / (d - 1) as f64;
                mean * mean + 10.0 * f_pen(x)
            }
            19 => {
                let c = rosenbrock_factor(d);
                let z: Vec<f64> = r.apply(x).iter().map(|v| c * v + 0.5).collect();
                let total: f64 = z
                    .windows(2)
                    .map(|w| {
                        let s = 100.0 * (w[0] * w[0] - w[1]).powi(2) + (w[0] - 1.0).powi(2);
                        s / 4000.0 - s.cos()
                    })
                    .sum();
                10.0 * total / (d - 1) as f64 + 10.0
            }
            20 => {
                let signs: Vec<f64> = self.x_opt.iter().map(|v| v.signum()).collect();
                let two_abs: Vec<f64> = self.x_opt.iter().map(|v| 2.0 * v.abs()).collect();
                let xh: Vec<f64> = x.iter().zip(&signs).map(|(a, s)| 2.0 * s * a).collect();
                let mut zh = xh.clone();
                for i in 1..d {
                    zh[i] = xh[i] + 0.25 * (xh[i - 1] - two_abs[i - 1]);
                }
                let lam = lambda(10.0, d);
                let z: Vec<f64> = (0..d).map(|i| 100.0 * (lam[i] * (zh[i] - two_abs[i]) + two_abs[i])).collect();
                let zs: Vec<f64> = z.iter().map(|v| v / 100.0).collect();
                -z.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>() / (100.0 * d as f64)
                    + 4.189828872724339
                    + 100.0 * f_pen(&zs)
            }
            21 | 22 => {
                let best = self
                    .peaks
                    .iter()
                    .map(|p| {
                        let u = r.apply(&diff(x, &p.center));
                        let quad: f64 = u.iter().zip(&p.curvature).map(|(ui, c)| c * ui * ui).sum();
                        p.weight * (-quad / (2.0 * d as f64)).exp()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                t_osz_scalar(10.0 - best).powi(2) + f_pen(x)
            }
            23 => {
                let z = q.apply(&scale(&lambda(100.0, d), &r.apply(&shifted())));
                let dd = d as f64;
                let expo = 10.0 / dd.powf(1.2);
                let prod: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, &zi)| {
                        let s: f64 = (1..=32)
                            .map(|j| {
                                let p = 2f64.powi(j);
                                (p * zi - (p * zi).round()).abs() / p
                            })
                            .sum();
                        (1.0 + (i + 1) as f64 * s).powf(expo)
                    })
                    .product();
                10.0 / (dd * dd) * prod - 10.0 / (dd * dd) + f_pen(x)
            }
            24 => {
                let dd = d as f64;
                let s = 1.0 - 1.0 / (2.0 * (dd + 20.0).sqrt() - 8.2);
                let mu1 = -((LUNACEK_MU0 * LUNACEK_MU0 - 1.0) / s).sqrt();
                let xh: Vec<f64> = x.iter().zip(&self.x_opt).map(|(a, o)| 2.0 * o.signum() * a).collect();
                let z = q.apply(&scale(
                    &lambda(100.0, d),
                    &r.apply(&xh.iter().map(|v| v - LUNACEK_MU0).collect::<Vec<_>>()),
                ));
                let first: f64 = xh.iter().map(|v| (v - LUNACEK_MU0).powi(2)).sum();
                let second: f64 = dd + s * xh.iter().map(|v| (v - mu1).powi(2)).sum::<f64>();
                first.min(second) + 10.0 * (dd - z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>()) + 1e4 * f_pen(x)
            }
            _ => unreachable!("fid validated at construction"),
        }
    }
}

fn shuffle<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    use rand::seq::SliceRandom;
    v.shuffle(rng);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_value_and_location() {
        for fid in 1..=24 {
            for iid in 1..=5 {
                for dim in [2, 5, 10] {
                    let inst = BbobInstance::new(fid, iid, dim).unwrap();
                    let bound = if fid == 5 { 5.0 } else { X_OPT_BOUND };
                    assert!(inst.x_opt.iter().all(|v| v.abs() <= bound), "f{fid} i{iid} d{dim}");
                    let v = inst.evaluate(&inst.x_opt);
                    assert!((v - inst.f_opt).abs() <= 1e-9, "f{fid} i{iid} d{dim}: {v} vs {}", inst.f_opt);
                    assert!((F_OPT_RANGE.0..=F_OPT_RANGE.1).contains(&inst.f_opt));
                }
            }
        }
    }

    #[test]
    fn sphere_unit_offset() {
        let inst = BbobInstance::new(1, 3, 4).unwrap();
        assert_eq!(inst.evaluate(&inst.x_opt), inst.f_opt);
        let mut p = inst.x_opt.clone();
        p[0] += 1.0;
        assert!((inst.evaluate(&p) - (inst.f_opt + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn optimum_is_a_local_minimum_for_smooth_functions() {
        let mut rng = rng::stream(99, &[]);
        for fid in [1, 2, 3, 8, 10, 11, 12, 13, 14, 15, 21, 22] {
            let inst = BbobInstance::new(fid, 1, 3).unwrap();
            for _ in 0..20 {
                let p: Vec<f64> = inst.x_opt.iter().map(|v| v + rng.random_range(-1e-3..1e-3)).collect();
                assert!(inst.evaluate(&p) >= inst.f_opt - 1e-12, "f{fid}");
            }
        }
    }

    #[test]
    fn rotations_are_orthogonal() {
        for fid in [6, 12, 23] {
            for dim in [2, 5, 10] {
                let inst = BbobInstance::new(fid, 2, dim).unwrap();
                for m in [inst.rotation_r(), inst.rotation_q()] {
                    for i in 0..dim {
                        for j in 0..dim {
                            let dot: f64 = (0..dim).map(|k| m.get(k, i) * m.get(k, j)).sum();
                            let want = if i == j { 1.0 } else { 0.0 };
                            assert!((dot - want).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_construction() {
        let a = BbobInstance::new(12, 3, 5).unwrap();
        let b = BbobInstance::new(12, 3, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x_opt, BbobInstance::new(12, 4, 5).unwrap().x_opt);
    }

    #[test]
    fn linear_slope_has_constant_gradient_signs() {
        let inst = BbobInstance::new(5, 1, 4).unwrap();
        let mut rng = rng::stream(5, &[]);
        let h = 1e-6;
        let expected: Vec<f64> = inst.x_opt.iter().map(|v| -v.signum()).collect();
        for _ in 0..100 {
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(-4.99..4.99)).collect();
            for i in 0..4 {
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += h;
                b[i] -= h;
                let g = (inst.evaluate(&a) - inst.evaluate(&b)) / (2.0 * h);
                assert_eq!(g.signum(), expected[i]);
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(BbobInstance::new(25, 1, 2), Err(BbobError::UnknownFunction(25)));
        assert_eq!(BbobInstance::new(0, 1, 2), Err(BbobError::UnknownFunction(0)));
        assert_eq!(BbobInstance::new(1, 0, 2), Err(BbobError::BadInstance));
        assert_eq!(BbobInstance::new(1, 1, 1), Err(BbobError::BadDimension(1)));
    }

    #[test]
    fn out_of_domain_is_flagged() {
        let inst = BbobInstance::new(1, 1, 2).unwrap();
        assert!(inst.evaluate_checked(&[0.0, 0.0]).1);
        assert!(!inst.evaluate_checked(&[6.0, 0.0]).1);
    }
}
