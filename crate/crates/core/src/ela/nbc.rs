//! Nearest-better clustering statistics.

use super::{DistanceMatrix, FeatureVector};
use crate::stats;

pub(crate) struct NearestBetter {
    pub nn_dist: Vec<f64>,
    /// Distance to and index of the closest strictly better point.
    pub nb: Vec<Option<(f64, usize)>>,
}

pub(crate) fn nearest_better(dist: &DistanceMatrix, y: &[f64]) -> NearestBetter {
    let m = dist.len();
    let mut nn_dist = vec![f64::INFINITY; m];
    let mut nb = vec![None; m];
    for i in 0..m {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            if i == j {
                continue;
            }
            let d = dist.get(i, j);
            nn_dist[i] = nn_dist[i].min(d);
            if y[j] < y[i] && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        nb[i] = best;
    }
    NearestBetter { nn_dist, nb }
}

pub(super) fn compute(dist: &DistanceMatrix, y: &[f64], fv: &mut FeatureVector) {
    let nbr = nearest_better(dist, y);
    let (mut nn, mut nb) = (Vec::new(), Vec::new());
    for (i, entry) in nbr.nb.iter().enumerate() {
        if let Some((d, _)) = entry {
            nn.push(nbr.nn_dist[i]);
            nb.push(*d);
        }
    }
    if nb.len() < 2 {
        return;
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
    fv.set("nbc.nn_nb.sd_ratio", ratio(stats::sd(&nn), stats::sd(&nb)));
    fv.set("nbc.nn_nb.mean_ratio", ratio(stats::mean(&nn), stats::mean(&nb)));
    fv.set("nbc.nn_nb.cor", stats::pearson(&nn, &nb));
    let ratios: Vec<f64> = nn.iter().zip(&nb).map(|(&a, &b)| ratio(a, b)).collect();
    if ratios.iter().all(|r| r.is_finite()) {
        fv.set("nbc.dist_ratio.coeff_var", ratio(stats::sd(&ratios), stats::mean(&ratios)));
    }
    let mut indegree = vec![0.0; y.len()];
    for (_, j) in nbr.nb.iter().flatten() {
        indegree[*j] += 1.0;
    }
    fv.set("nbc.nb_fitness.cor", stats::pearson(&indegree, y));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Points;

    #[test]
    fn chain() {
        // Points on a line with y decreasing to the right: each point's
        // nearest better neighbour is the next one.
        let p = Points::from_rows(&(0..5).map(|i| vec![i as f64, 0.0]).collect::<Vec<_>>());
        let y = [4.0, 3.0, 2.0, 1.0, 0.0];
        let nbr = nearest_better(&DistanceMatrix::new(&p), &y);
        assert_eq!(nbr.nb[0], Some((1.0, 1)));
        assert_eq!(nbr.nb[3], Some((1.0, 4)));
        assert_eq!(nbr.nb[4], None);
        assert!(nbr.nn_dist.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn ties_are_not_better() {
        let p = Points::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]);
        let nbr = nearest_better(&DistanceMatrix::new(&p), &[1.0, 1.0, 0.0]);
        assert_eq!(nbr.nb[0], Some((3.0, 2)));
    }
}
