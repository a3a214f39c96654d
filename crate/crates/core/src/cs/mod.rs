//! Partial-DCT sensing, compression and sparse recovery.

mod compress;
mod recover;
mod ric;
mod sensing;

pub use compress::{compress, compress_matrix, CompressedWindow};
pub use recover::{
    orthogonal_matching_pursuit, reconstruct, reconstruction_mse, SparseRecovery,
    RESIDUAL_TOLERANCE,
};
pub use ric::{ric_estimate, RicEstimate};
#[cfg(test)]
pub(crate) use sensing::measurement_count_for;
pub use sensing::{
    build_sensing_matrix, choose_measurement_count, coherence, dct_entry, min_measurements,
    SamplerConfig, SensingMatrix,
};

#[cfg(test)]
mod proptests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn compression_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let u = build_sensing_matrix(32, 12, seed).unwrap();
            let p = DMatrix::from_fn(32, 3, |i, j| ((i * 7 + j * 3 + seed as usize) % 11) as f64);
            let q = DMatrix::from_fn(32, 3, |i, j| ((i * 5 + j + seed as usize) % 13) as f64 - 6.0);
            let lhs = compress_matrix(&u, &(&p * a + &q * b), "l").unwrap().y;
            let rhs = compress_matrix(&u, &p, "p").unwrap().y * a
                + compress_matrix(&u, &q, "q").unwrap().y * b;
            prop_assert!((lhs - rhs).amax() < 1e-9);
        }

        #[test]
        fn columns_have_unit_norm(n in 2usize..200, frac in 0.05f64..1.0, seed in any::<u64>()) {
            let m = ((n as f64 * frac).ceil() as usize).clamp(1, n);
            let u = build_sensing_matrix(n, m, seed).unwrap();
            for c in u.matrix().column_iter() {
                prop_assert!((c.norm() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn measurement_count_monotone_in_epsilon(n in 2usize..5000, e1 in 0.01f64..4.0, e2 in 0.01f64..4.0) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(measurement_count_for(n, lo) <= measurement_count_for(n, hi));
            prop_assert!(measurement_count_for(n, hi) <= n);
        }

        #[test]
        fn measurement_count_monotone_in_n(n in 2usize..5000, d in 1usize..500, eps in 0.01f64..4.0) {
            prop_assert!(measurement_count_for(n, eps) <= measurement_count_for(n + d, eps));
        }
    }
}
