//! Information content of a nearest-neighbour walk through the sample.

use super::{DistanceMatrix, FeatureVector};
use crate::sampling::Points;

pub(crate) const EPS_GRID_LEN: usize = 1000;
pub(crate) const EPS_LOG_RANGE: (f64, f64) = (-5.0, 15.0);
/// Entropy below which the walk counts as settled.
pub(crate) const SETTLING_THRESHOLD: f64 = 0.05;

/// Positive part of the threshold grid, log-spaced.
pub(crate) fn eps_grid() -> Vec<f64> {
    let (lo, hi) = EPS_LOG_RANGE;
    let step = (hi - lo) / (EPS_GRID_LEN - 1) as f64;
    (0..EPS_GRID_LEN).map(|i| 10f64.powf(lo + step * i as f64)).collect()
}

/// Greedy nearest-neighbour tour starting at point 0.
pub(crate) fn tour(dist: &DistanceMatrix) -> Vec<usize> {
    let m = dist.len();
    let mut visited = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let mut cur = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..m {
        let mut next = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..m {
            if !visited[j] && dist.get(cur, j) < best {
                best = dist.get(cur, j);
                next = j;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

pub(crate) fn slopes(dist: &DistanceMatrix, y: &[f64], order: &[usize]) -> Vec<f64> {
    order
        .windows(2)
        .map(|w| {
            let d = dist.get(w[0], w[1]);
            if d > 0.0 {
                (y[w[1]] - y[w[0]]) / d
            } else {
                0.0
            }
        })
        .collect()
}

/// Entropy and partial information at threshold `eps`, without
/// materializing the symbol string.
fn profile(slopes: &[f64], eps: f64, counts: &mut [usize; 9]) -> (f64, f64) {
    let sym = |s: f64| -> i8 {
        if s < -eps {
            -1
        } else if s > eps {
            1
        } else {
            0
        }
    };
    counts.fill(0);
    let mut collapsed = 0usize;
    let mut last_nonzero = 0i8;
    let mut prev: Option<i8> = None;
    for &s in slopes {
        let c = sym(s);
        if let Some(p) = prev {
            if p != c {
                counts[((p + 1) * 3 + (c + 1)) as usize] += 1;
            }
        }
        if c != 0 && c != last_nonzero {
            collapsed += 1;
            last_nonzero = c;
        }
        prev = Some(c);
    }
    let n = slopes.len();
    if n < 2 {
        return (0.0, if n == 0 { 0.0 } else { collapsed as f64 });
    }
    let total = (n - 1) as f64;
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln() / 6f64.ln()
        })
        .sum::<f64>();
    (h, collapsed as f64 / n as f64)
}

pub(super) fn compute(_points: &Points, dist: &DistanceMatrix, y: &[f64], fv: &mut FeatureVector) {
    let order = tour(dist);
    let psi = slopes(dist, y, &order);
    let steepest = psi.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut counts = [0usize; 9];
    let (h0, m0) = profile(&psi, 0.0, &mut counts);
    let mut h_max = h0;
    let mut eps_max = None;
    let mut best_positive = f64::NEG_INFINITY;
    let mut eps_s = None;
    let mut eps_ratio = None;
    for eps in eps_grid() {
        // Beyond the steepest slope every symbol is 0: entropy and partial
        // information are both 0 from here on.
        let (h, m) = if eps >= steepest { (0.0, 0.0) } else { profile(&psi, eps, &mut counts) };
        h_max = h_max.max(h);
        if h > best_positive {
            best_positive = h;
            eps_max = Some(eps);
        }
        if eps_s.is_none() && h < SETTLING_THRESHOLD {
            eps_s = Some(eps);
        }
        if m0 > 0.0 && m > 0.5 * m0 {
            eps_ratio = Some(eps);
        }
        if eps >= steepest && eps_s.is_some() {
            break;
        }
    }
    fv.set("ic.h_max", h_max);
    fv.set("ic.m0", m0);
    if let Some(e) = eps_s {
        fv.set("ic.eps_s", e.log10());
    }
    if let Some(e) = eps_max {
        fv.set("ic.eps_max", e.log10());
    }
    if let Some(e) = eps_ratio {
        fv.set("ic.eps_ratio", e.log10());
    }
}
