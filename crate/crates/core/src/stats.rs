//! Small descriptive statistics used across the feature and analysis code.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (denominator `n - 1`).
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Population standard deviation (denominator `n`).
pub fn sd_population(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / xs.len() as f64).sqrt()
}

/// Pearson correlation; NaN when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Ranks starting at 1 with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Quantile with linear interpolation between order statistics
/// (the "type 7" estimator). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Same value as [`quantile_sorted`] on the sorted input, via selection.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    let h = (s.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let (_, &mut at_lo, upper) = s.select_nth_unstable_by(lo, f64::total_cmp);
    if h == lo as f64 || upper.is_empty() {
        return at_lo;
    }
    let at_hi = upper.iter().copied().fold(f64::INFINITY, f64::min);
    at_lo + (h - lo as f64) * (at_hi - at_lo)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Kendall's tau-b, accounting for ties on either side. Knight's
/// merge-sort algorithm, `O(n log n)`.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let tied = |run: usize| (run * run.saturating_sub(1) / 2) as u64;
    let (mut ties_x, mut ties_xy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1usize, 1usize);
    for k in 1..=n {
        let same_x = k < n && pairs[k].0 == pairs[k - 1].0;
        let same_xy = same_x && pairs[k].1 == pairs[k - 1].1;
        if same_xy {
            run_xy += 1;
        } else {
            ties_xy += tied(run_xy);
            run_xy = 1;
        }
        if same_x {
            run_x += 1;
        } else {
            ties_x += tied(run_x);
            run_x = 1;
        }
    }
    let mut y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut y);
    let mut ties_y = 0u64;
    let mut run = 1usize;
    for k in 1..=n {
        if k < n && y[k] == y[k - 1] {
            run += 1;
        } else {
            ties_y += tied(run);
            run = 1;
        }
    }
    let n0 = tied(n) as f64;
    let denom = ((n0 - ties_x as f64) * (n0 - ties_y as f64)).sqrt();
    if denom == 0.0 {
        return f64::NAN;
    }
    let s = n0 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    s / denom
}

/// Sorts `v` ascending and returns the number of inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            merged.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn type7_quantile() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn kendall_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = x.iter().map(|v| v * v).collect();
        let down: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(kendall_tau_b(&x, &up), 1.0);
        assert_eq!(kendall_tau_b(&x, &down), -1.0);
    }

    #[test]
    fn kendall_matches_pair_count() {
        use rand::Rng;
        let mut r = crate::rng::stream(9, &[]);
        for _ in 0..200 {
            let n = r.random_range(2..40);
            let xs: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
            let ys: Vec<f64> = (0..n).map(|_| r.random_range(0..6) as f64).collect();
            let (mut c, mut d, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = xs[i] - xs[j];
                    let dy = ys[i] - ys[j];
                    match (dx == 0.0, dy == 0.0) {
                        (true, true) => {}
                        (true, false) => tx += 1.0,
                        (false, true) => ty += 1.0,
                        _ if dx * dy > 0.0 => c += 1.0,
                        _ => d += 1.0,
                    }
                }
            }
            let denom: f64 = ((c + d + tx) * (c + d + ty)).sqrt();
            let want = if denom == 0.0 { f64::NAN } else { (c - d) / denom };
            let got = kendall_tau_b(&xs, &ys);
            assert!((got - want).abs() < 1e-12 || (got.is_nan() && want.is_nan()), "{got} vs {want}");
        }
    }

    #[test]
    fn kendall_matches_hand_count() {
        // pairs: (1,2)+ (1,3)+ (1,4)+ (2,3)- (2,4)+ (3,4)+ -> (5-1)/6
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert!((kendall_tau_b(&x, &y) - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_correlation_is_nan() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_nan());
    }
}
