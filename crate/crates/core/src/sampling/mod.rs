//! Sobol' designs on `[-5, 5]^d` and bootstrap index sets.

mod directions;

use crate::rng::{self, tag};
use rand::seq::index;
use serde::{Deserialize, Serialize};

/// Lower and upper bound of every coordinate of the search box.
pub const DOMAIN: (f64, f64) = (-5.0, 5.0);
/// Design size per dimension.
pub const SAMPLES_PER_DIM: usize = 150;
pub const BOOTSTRAP_FRACTION: f64 = 0.8;
pub const BOOTSTRAP_REPS: usize = 5;
/// Highest dimension with tabulated direction numbers.
pub const MAX_SOBOL_DIM: usize = directions::DIRECTIONS.len();

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("Sobol' sequence supports 1..={MAX_SOBOL_DIM} dimensions, got {0}")]
    DimensionUnsupported(usize),
    #[error("design size must be in 1..=2^32, got {0}")]
    BadSize(usize),
    #[error("bootstrap fraction must lie in (0, 1], got {0}")]
    BadFraction(f64),
}

/// Row-major `n x d` point matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(data.len() % dim, 0, "data length is not a multiple of the dimension");
        Points { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        let data = rows.iter().flat_map(|r| {
            assert_eq!(r.len(), dim, "ragged rows");
            r.iter().copied()
        });
        Points::new(dim, data.collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, indices: &[usize]) -> Points {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Points { dim: self.dim, data }
    }
}

fn direction_vectors(dim: usize) -> [u32; 32] {
    let (poly, m) = directions::DIRECTIONS[dim];
    let mut v = [0u32; 32];
    let degree = (32 - poly.leading_zeros() - 1) as usize;
    if degree == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let a = (poly >> 1) & ((1 << (degree - 1)) - 1);
    for k in 0..degree.min(32) {
        v[k] = m[k] << (31 - k);
    }
    for k in degree..32 {
        let j = k - degree;
        let mut next = v[j] ^ (v[j] >> degree);
        for l in 0..degree - 1 {
            if (a >> l) & 1 == 1 {
                next ^= v[j + 1 + l];
            }
        }
        v[k] = next;
    }
    v
}

/// Integer Sobol' points (Gray-code order), `n` rows by `dim` columns.
fn sobol_integers(dim: usize, n: usize) -> Vec<u32> {
    let vectors: Vec<[u32; 32]> = (0..dim).map(direction_vectors).collect();
    let mut out = vec![0u32; n * dim];
    let mut state = vec![0u32; dim];
    for i in 1..n {
        let c = (i as u64).trailing_zeros() as usize;
        for (j, s) in state.iter_mut().enumerate() {
            *s ^= vectors[j][c];
        }
        out[i * dim..(i + 1) * dim].copy_from_slice(&state);
    }
    out
}

/// Nested uniform (Owen) scramble of a 32-bit coordinate: each output bit
/// is flipped by a hash of the bits above it.
fn owen_scramble(value: u32, dim: usize, seed: u64) -> u32 {
    let key = rng::derive_seed(seed, &[tag::SOBOL, dim as u64]);
    let mut out = 0u32;
    for bit in 0..32u32 {
        let prefix = if bit == 0 { 0 } else { (value >> (32 - bit)) as u64 };
        let node = ((bit as u64) << 32) | prefix;
        let flip = (rng::splitmix64(key ^ rng::splitmix64(node)) & 1) as u32;
        let b = (value >> (31 - bit)) & 1;
        out |= (b ^ flip) << (31 - bit);
    }
    out
}

fn check(dim: usize, n: usize) -> Result<(), SamplingError> {
    if dim == 0 || dim > MAX_SOBOL_DIM {
        return Err(SamplingError::DimensionUnsupported(dim));
    }
    if n == 0 || n as u64 > 1 << 32 {
        return Err(SamplingError::BadSize(n));
    }
    Ok(())
}

fn to_domain(u: u32) -> f64 {
    let unit = u as f64 / 4_294_967_296.0;
    DOMAIN.0 + (DOMAIN.1 - DOMAIN.0) * unit
}

/// The first `n` points of the plain Sobol' sequence in `[0, 1)^d`.
pub fn sobol_unit_unscrambled(dim: usize, n: usize) -> Result<Points, SamplingError> {
    check(dim, n)?;
    let data = sobol_integers(dim, n).into_iter().map(|u| u as f64 / 4_294_967_296.0).collect();
    Ok(Points::new(dim, data))
}

/// The first `n` points of a Sobol' sequence mapped onto `[-5, 5]^d`,
/// Owen-scrambled with `seed` when `scramble` is set.
pub fn sobol_points(dim: usize, n: usize, seed: u64, scramble: bool) -> Result<Points, SamplingError> {
    check(dim, n)?;
    let ints = sobol_integers(dim, n);
    let data = ints
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let u = if scramble { owen_scramble(u, k % dim, seed) } else { u };
            to_domain(u)
        })
        .collect();
    Ok(Points::new(dim, data))
}

/// Seeded scrambled Sobol' design on `[-5, 5]^d`.
pub fn sobol_design(dim: usize, n: usize, seed: u64) -> Result<Points, SamplingError> {
    sobol_points(dim, n, seed, true)
}

/// `reps` sorted index lists of `round(fraction * n)` distinct indices.
pub fn make_bootstraps(n: usize, fraction: f64, reps: usize, seed: u64) -> Result<Vec<Vec<usize>>, SamplingError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(SamplingError::BadFraction(fraction));
    }
    let size = ((fraction * n as f64).round() as usize).clamp(1, n.max(1));
    Ok((0..reps)
        .map(|rep| {
            let mut rng = rng::stream(seed, &[tag::BOOTSTRAP, rep as u64]);
            let mut idx = index::sample(&mut rng, n, size).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// A design of experiments: Sobol' points plus bootstrap index sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoeDesign {
    pub seed: u64,
    pub points: Points,
    pub bootstraps: Vec<Vec<usize>>,
}

impl DoeDesign {
    /// Standard design: `150 d` points, five 80% subsamples.
    pub fn new(dim: usize, seed: u64) -> Result<Self, SamplingError> {
        Self::with_size(dim, SAMPLES_PER_DIM * dim, seed)
    }

    pub fn with_size(dim: usize, n: usize, seed: u64) -> Result<Self, SamplingError> {
        let points = sobol_design(dim, n, seed)?;
        let bootstraps = make_bootstraps(n, BOOTSTRAP_FRACTION, BOOTSTRAP_REPS, seed)?;
        Ok(DoeDesign { seed, points, bootstraps })
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
