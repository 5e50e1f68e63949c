//! One-dimensional Wasserstein-1 distance between empirical distributions.

use super::SpaceError;

/// Integral of `|F_a - F_b|` over the merged support of both samples.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64, SpaceError> {
    if a.is_empty() || b.is_empty() {
        return Err(SpaceError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(SpaceError::NonFiniteSample);
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut prev = sa[0].min(sb[0]);
    while i < sa.len() || j < sb.len() {
        let next = match (sa.get(i), sb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (next - prev) * (i as f64 / na - j as f64 / nb).abs();
        while i < sa.len() && sa[i] == next {
            i += 1;
        }
        while j < sb.len() && sb[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(wasserstein_1d(&[0.0], &[-3.5]).unwrap(), 3.5);
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[], &[1.0]), Err(SpaceError::EmptySample));
    }

    #[test]
    fn unequal_sizes() {
        // Point mass at 0 vs uniform on {0, 1, 2, 3}: mean distance 1.5.
        assert!((wasserstein_1d(&[0.0], &[3.0, 1.0, 0.0, 2.0]).unwrap() - 1.5).abs() < 1e-15);
        // {0, 1} vs {0, 0, 0, 1, 1, 1} are the same distribution.
        assert!(wasserstein_1d(&[0.0, 1.0], &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn equal_sizes_match_sorted_pairing() {
        let a = [0.3, -1.0, 2.0, 0.0];
        let b = [5.0, 0.1, 0.2, -0.5];
        let mut sa = a.to_vec();
        let mut sb = b.to_vec();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        let want: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / 4.0;
        assert!((wasserstein_1d(&a, &b).unwrap() - want).abs() < 1e-12);
    }
}
