//! Distances between feature vectors.

use super::SpaceError;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Canberra,
    Cosine,
    Correlation,
    Euclidean,
    Cityblock,
    Wasserstein,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 6] = [
        DistanceMetric::Canberra,
        DistanceMetric::Cosine,
        DistanceMetric::Correlation,
        DistanceMetric::Euclidean,
        DistanceMetric::Cityblock,
        DistanceMetric::Wasserstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::Canberra => "canberra",
            DistanceMetric::Cosine => "cosine",
            DistanceMetric::Correlation => "correlation",
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Cityblock => "cityblock",
            DistanceMetric::Wasserstein => "wasserstein",
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SpaceError> {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(SpaceError::UndefinedDistance("zero-norm vector"));
    }
    Ok((1.0 - dot(u, v) / (nu * nv)).max(0.0))
}

/// Distance between two vectors of equal length. Wasserstein is not a
/// vector metric and is rejected here; use the replicate-based helpers.
pub fn vector_distance(metric: DistanceMetric, u: &[f64], v: &[f64]) -> Result<f64, SpaceError> {
    if u.len() != v.len() {
        return Err(SpaceError::LengthMismatch(u.len(), v.len()));
    }
    let pairs = u.iter().zip(v);
    Ok(match metric {
        DistanceMetric::Canberra => pairs
            .map(|(a, b)| {
                let den = a.abs() + b.abs();
                if den == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / den
                }
            })
            .sum(),
        DistanceMetric::Cosine => cosine(u, v)?,
        DistanceMetric::Correlation => {
            let mu = crate::stats::mean(u);
            let mv = crate::stats::mean(v);
            let cu: Vec<f64> = u.iter().map(|a| a - mu).collect();
            let cv: Vec<f64> = v.iter().map(|b| b - mv).collect();
            cosine(&cu, &cv)?
        }
        DistanceMetric::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        DistanceMetric::Cityblock => pairs.map(|(a, b)| (a - b).abs()).sum(),
        DistanceMetric::Wasserstein => {
            return Err(SpaceError::UndefinedDistance("wasserstein needs replicate samples"))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(vector_distance(DistanceMetric::Cityblock, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert!(vector_distance(DistanceMetric::Cosine, &[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() < 1e-15);
        assert_eq!(vector_distance(DistanceMetric::Canberra, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(vector_distance(DistanceMetric::Euclidean, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let c = vector_distance(DistanceMetric::Correlation, &[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        assert!(vector_distance(DistanceMetric::Cosine, &[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(vector_distance(DistanceMetric::Correlation, &[2.0, 2.0], &[1.0, 3.0]).is_err());
        assert!(vector_distance(DistanceMetric::Euclidean, &[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(vector_distance(DistanceMetric::Canberra, &[0.0], &[0.0]).unwrap(), 0.0);
    }
}
