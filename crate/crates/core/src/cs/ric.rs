use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monte-Carlo lower estimate of the restricted isometry constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RicEstimate {
    pub delta_k: f64,
    pub trials: usize,
    pub k: usize,
    /// Maximum after each trial; non-decreasing.
    pub running_max: Vec<f64>,
}

/// Estimate `delta_k` as the largest `| ||U x||^2 - 1 |` over random
/// unit-norm `k`-sparse `x`.
///
/// The true constant is a supremum, so this only ever underestimates it.
pub fn ric_estimate(u: &DMatrix<f64>, k: usize, trials: usize, seed: u64) -> Result<RicEstimate> {
    let n = u.ncols();
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("sparsity {k} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut running_max = Vec::with_capacity(trials);
    let mut best = 0.0f64;
    for _ in 0..trials {
        let support = rand::seq::index::sample(&mut rng, n, k);
        let mut vals: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            vals[0] = 1.0;
        } else {
            vals.iter_mut().for_each(|v| *v /= norm);
        }
        let mut y = DVector::zeros(u.nrows());
        for (j, v) in support.iter().zip(&vals) {
            y.axpy(*v, &u.column(j), 1.0);
        }
        best = best.max((y.norm_squared() - 1.0).abs());
        running_max.push(best);
    }
    Ok(RicEstimate {
        delta_k: best,
        trials,
        k,
        running_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::build_sensing_matrix;

    #[test]
    fn orthonormal_matrix_has_zero_ric() {
        let u = DMatrix::<f64>::identity(16, 16);
        let est = ric_estimate(&u, 4, 50, 0).unwrap();
        assert!(est.delta_k < 1e-12);
    }

    #[test]
    fn running_max_is_monotone_and_seeded() {
        let u = build_sensing_matrix(128, 40, 3).unwrap();
        let a = ric_estimate(u.matrix(), 5, 100, 9).unwrap();
        let b = ric_estimate(u.matrix(), 5, 100, 9).unwrap();
        assert_eq!(a.running_max, b.running_max);
        assert!(a.running_max.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.delta_k, *a.running_max.last().unwrap());
        assert!(a.delta_k > 0.0);
    }

    #[test]
    fn half_sampled_dct_keeps_four_sparse_isometry() {
        let u = build_sensing_matrix(64, 32, 1).unwrap();
        let est = ric_estimate(u.matrix(), 4, 500, 2).unwrap();
        assert_eq!(est.trials, 500);
        assert!(est.delta_k < 1.0, "delta {}", est.delta_k);
    }

    #[test]
    fn bad_arguments() {
        let u = DMatrix::<f64>::identity(4, 4);
        assert!(ric_estimate(&u, 2, 0, 0).is_err());
        assert!(ric_estimate(&u, 0, 5, 0).is_err());
        assert!(ric_estimate(&u, 5, 5, 0).is_err());
    }
}
