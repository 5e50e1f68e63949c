//! Shape of the objective distribution.

use super::FeatureVector;
use crate::stats;

const KDE_GRID: usize = 512;
/// Bandwidths beyond the data range, as in the usual density defaults.
const KDE_CUT: f64 = 3.0;
/// Two maxima count as separate peaks only if the valley between them is
/// at least this much (relative) below the lower one.
const PEAK_TOLERANCE: f64 = 1e-3;
const KERNEL_REACH: f64 = 7.0;

pub(super) fn compute(y: &[f64], fv: &mut FeatureVector) {
    let (skew, kurt) = moments(y);
    fv.set("ela_distr.skewness", skew);
    fv.set("ela_distr.kurtosis", kurt);
    fv.set("ela_distr.number_of_peaks", number_of_peaks(y));
}

/// Sample skewness and excess kurtosis, using the `(n-1)/n` corrected
/// moment ratios (the "type 3" estimators).
pub(crate) fn moments(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mu = stats::mean(y);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in y {
        let c = v - mu;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let f = (n - 1.0) / n;
    let skew = m3 / m2.powf(1.5) * f.powf(1.5);
    let kurt = m4 / (m2 * m2) * f * f - 3.0;
    (skew, kurt)
}

/// Gaussian-kernel bandwidth from Silverman's rule of thumb.
pub(crate) fn silverman_bandwidth(y: &[f64]) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let sd = stats::sd(y);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = if sd > 0.0 { sd } else { 1.0 };
    }
    0.9 * spread * (y.len() as f64).powf(-0.2)
}

/// Kernel density of `y` on an evenly spaced grid (unnormalized).
/// Kernels are truncated at `KERNEL_REACH` bandwidths, where they fall
/// below 3e-11 of their peak.
pub(crate) fn kde(y: &[f64]) -> Vec<f64> {
    let bw = silverman_bandwidth(y);
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0] - KDE_CUT * bw;
    let hi = sorted[sorted.len() - 1] + KDE_CUT * bw;
    let step = (hi - lo) / (KDE_GRID - 1) as f64;
    let reach = KERNEL_REACH * bw;
    let mut start = 0;
    (0..KDE_GRID)
        .map(|g| {
            let t = lo + step * g as f64;
            while start < sorted.len() && sorted[start] < t - reach {
                start += 1;
            }
            sorted[start..]
                .iter()
                .take_while(|&&v| v <= t + reach)
                .map(|&v| {
                    let z = (t - v) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect()
}

pub(crate) fn count_modes(dens: &[f64]) -> usize {
    // Collect strict local maxima (plateaus count once, at their left end)
    // together with the minimum seen since the previous maximum.
    let mut peaks: Vec<f64> = Vec::new();
    let mut valleys: Vec<f64> = Vec::new();
    let mut run_min = f64::INFINITY;
    let n = dens.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && dens[j + 1] == dens[i] {
            j += 1;
        }
        let left_lower = i == 0 || dens[i - 1] < dens[i];
        let right_lower = j + 1 == n || dens[j + 1] < dens[i];
        if left_lower && right_lower {
            valleys.push(run_min);
            peaks.push(dens[i]);
            run_min = f64::INFINITY;
        } else {
            run_min = run_min.min(dens[i]);
        }
        i = j + 1;
    }
    if peaks.is_empty() {
        return 1;
    }
    // Merge neighbours separated by a negligible dip.
    let mut count = 1;
    let mut current = peaks[0];
    for k in 1..peaks.len() {
        let lower = current.min(peaks[k]);
        if (lower - valleys[k]) / lower >= PEAK_TOLERANCE {
            count += 1;
            current = peaks[k];
        } else {
            current = current.max(peaks[k]);
        }
    }
    count
}

pub(crate) fn number_of_peaks(y: &[f64]) -> f64 {
    count_modes(&kde(y)) as f64
}
