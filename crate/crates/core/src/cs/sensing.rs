use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters for choosing the number of compressed measurements.
///
/// Logarithms in the measurement formulas are natural logs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Per-active-feature rate constant; the effective constant is
    /// `epsilon * active_features`.
    pub epsilon: f64,
    /// Constant of the coherence-based lower bound on `M` (advisory).
    pub const_c: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            epsilon: 0.25,
            const_c: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be > 0".into()));
        }
        if !(self.const_c > 0.0 && self.const_c.is_finite()) {
            return Err(Error::InvalidParameter("const_c must be > 0".into()));
        }
        Ok(())
    }
}

/// `M = clamp(ceil(eps' * sqrt(N) * ln N), 1, N)` with `eps' = epsilon * active_features`.
pub fn choose_measurement_count(n: usize, active_features: usize, cfg: &SamplerConfig) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("N = {n}; need N >= 2 for ln N > 0")));
    }
    cfg.validate()?;
    let eps = cfg.epsilon * active_features as f64;
    Ok(measurement_count_for(n, eps))
}

pub(crate) fn measurement_count_for(n: usize, eps: f64) -> usize {
    let nf = n as f64;
    let m = (eps * nf.sqrt() * nf.ln()).ceil();
    if m.is_nan() || m < 1.0 {
        1
    } else if m >= nf {
        n
    } else {
        m as usize
    }
}

/// Coherence-based lower bound `Const * mu^2 * Q * ln N` on the measurement count.
pub fn min_measurements(mu: f64, q: f64, n: usize, const_c: f64) -> f64 {
    const_c * mu * mu * q * (n as f64).ln()
}

/// Largest absolute entry.
pub fn coherence(u: &DMatrix<f64>) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// An `M x N` measurement operator made of `M` rows of the orthonormal
/// DCT-II, columns rescaled to unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingMatrix {
    matrix: DMatrix<f64>,
    row_subset: Vec<usize>,
    coherence: f64,
    seed: Option<u64>,
    constant_image: Vec<f64>,
}

/// Entry `(k, t)` of the orthonormal `N x N` DCT-II.
pub fn dct_entry(n: usize, k: usize, t: usize) -> f64 {
    let nf = n as f64;
    let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
    scale * (PI * (2 * t + 1) as f64 * k as f64 / (2.0 * nf)).cos()
}

pub fn build_sensing_matrix(n: usize, m: usize, seed: u64) -> Result<SensingMatrix> {
    if m == 0 || m > n {
        return Err(Error::InvalidDimension(format!("need 1 <= M <= N, got M = {m}, N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, m).into_vec();
    rows.sort_unstable();
    let mut u = DMatrix::from_fn(m, n, |i, t| dct_entry(n, rows[i], t));
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let mut s = SensingMatrix::from_parts(u, rows)?;
    s.seed = Some(seed);
    Ok(s)
}

impl SensingMatrix {
    /// Wrap an explicit matrix without renormalizing its columns.
    pub fn from_parts(matrix: DMatrix<f64>, row_subset: Vec<usize>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::InvalidDimension("empty sensing matrix".into()));
        }
        if matrix.nrows() > matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "M = {} exceeds N = {}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if row_subset.len() != matrix.nrows() {
            return Err(Error::InvalidDimension("row subset length must equal M".into()));
        }
        let mut seen = row_subset.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != row_subset.len() {
            return Err(Error::InvalidParameter("row subset entries must be unique".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sensing matrix"));
        }
        let constant_image = matrix.column_sum().iter().copied().collect();
        Ok(SensingMatrix {
            coherence: coherence(&matrix),
            matrix,
            row_subset,
            seed: None,
            constant_image,
        })
    }

    pub fn identity(n: usize) -> Self {
        SensingMatrix::from_parts(DMatrix::identity(n, n), (0..n).collect())
            .expect("identity is a valid sensing matrix")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn row_subset(&self) -> &[usize] {
        &self.row_subset
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `U_v * 1`, the image of a constant signal.
    pub fn constant_image(&self) -> &[f64] {
        &self.constant_image
    }

    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }
}
