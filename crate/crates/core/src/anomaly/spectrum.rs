use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::cs::CompressedWindow;
use crate::error::{Error, Result};

/// Covariance of the feature columns of a compressed window.
///
/// The time mean of each feature maps to a multiple of `u = U_v * 1` in the
/// compressed domain, so columns are projected off `u` rather than centered
/// on their own `M` entries. With `M = N` this reproduces the sample
/// covariance of the uncompressed window exactly. Windows without a stored
/// image (all zeros) are treated as raw samples.
pub fn compressed_covariance(y: &CompressedWindow) -> Result<DMatrix<f64>> {
    if y.y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("compressed window"));
    }
    let m = y.m();
    let n = y.n.max(2);
    let mut u = DVector::from_column_slice(&y.constant_image);
    if u.len() != m || u.norm_squared() == 0.0 {
        u = DVector::from_element(m, 1.0);
    }
    let uu = u.norm_squared();
    let mut centered = y.y.clone();
    for mut col in centered.column_iter_mut() {
        let c = u.dot(&col) / uu;
        col.axpy(-c, &u, 1.0);
    }
    let mut cov = centered.tr_mul(&centered) / (n - 1) as f64;
    // exact symmetry for the eigensolver
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(cov)
}

/// Eigendecomposition of a covariance matrix split into principal and
/// residual parts.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// All eigenvectors as columns, in eigenvalue order.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
    /// Principal dimension.
    pub k: usize,
    pub power_fraction: f64,
    /// Set when the covariance had no variance at all.
    pub degenerate: bool,
}

impl Spectrum {
    pub fn from_covariance(cov: &DMatrix<f64>, power_fraction: f64) -> Result<Self> {
        if !(power_fraction > 0.0 && power_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power fraction {power_fraction} outside (0, 1]"
            )));
        }
        if !cov.is_square() {
            return Err(Error::InvalidDimension(format!(
                "covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let d = cov.nrows();
        let eig = SymmetricEigen::new(cov.clone());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let mut eigenvectors = DMatrix::zeros(d, d);
        for (c, &i) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(i).clone_owned();
            // sign convention: largest-magnitude entry positive
            if d > 0 && v[v.iamax()] < 0.0 {
                v.neg_mut();
            }
            eigenvectors.set_column(c, &v);
        }
        let total: f64 = eigenvalues.iter().sum();
        let degenerate = total <= 0.0;
        let mut k = 0;
        if !degenerate {
            let mut acc = 0.0;
            for &l in &eigenvalues {
                acc += l;
                k += 1;
                if acc >= power_fraction * total * (1.0 - 1e-12) {
                    break;
                }
            }
        } else {
            log::warn!("covariance has no variance; principal subspace is empty");
        }
        Ok(Spectrum {
            eigenvalues,
            eigenvectors,
            k,
            power_fraction,
            degenerate,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `d x k` principal directions `E`.
    pub fn principal(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.k).clone_owned()
    }

    pub fn residual_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[self.k..]
    }

    /// `I - E E^T`.
    pub fn residual_projector(&self) -> DMatrix<f64> {
        let e = self.principal();
        DMatrix::identity(self.dim(), self.dim()) - &e * e.transpose()
    }
}

/// Spectrum of the compressed window's feature covariance.
pub fn principal_subspace(y: &CompressedWindow, power_fraction: f64) -> Result<Spectrum> {
    Spectrum::from_covariance(&compressed_covariance(y)?, power_fraction)
}

/// `z = (I - E E^T) x`.
pub fn residual_projection(e: &DMatrix<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    if e.ncols() == 0 {
        return Ok(x.clone());
    }
    if e.nrows() != x.len() {
        return Err(Error::ShapeMismatch {
            op: "residual_projection",
            left: e.shape(),
            right: (x.len(), 1),
        });
    }
    let coords = e.tr_mul(x);
    Ok(x - e * coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::{build_sensing_matrix, compress_matrix};
    use proptest::prelude::*;

    #[test]
    fn diagonal_covariance() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let s = Spectrum::from_covariance(&cov, 0.8).unwrap();
        assert_eq!(s.k, 1);
        assert_eq!(s.eigenvalues, vec![4.0, 1.0]);
        let e = s.principal();
        assert!((e[(0, 0)]).abs() < 1e-12 && (e[(1, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(s.residual_eigenvalues(), &[1.0]);
    }

    #[test]
    fn zero_window_is_degenerate() {
        let y = CompressedWindow::from_measurements("z", DMatrix::zeros(8, 3), 8);
        let s = principal_subspace(&y, 0.9).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.k, 0);
        assert_eq!(s.principal().ncols(), 0);
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DMatrix::zeros(4, 2);
        m[(1, 1)] = f64::NAN;
        let y = CompressedWindow::from_measurements("n", m, 4);
        assert!(matches!(principal_subspace(&y, 0.9), Err(Error::NonFinite(_))));
    }

    #[test]
    fn projection_examples() {
        let e = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let z = residual_projection(&e, &DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 4.0]);
        let empty = DMatrix::<f64>::zeros(2, 0);
        let x = DVector::from_vec(vec![1.5, -2.0]);
        assert_eq!(residual_projection(&empty, &x).unwrap(), x);
        let z = residual_projection(&e, &DVector::from_vec(vec![7.0, 0.0])).unwrap();
        assert!(z.norm() < 1e-12);
        assert!(residual_projection(&e, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn full_sensing_keeps_sample_covariance() {
        let n = 48;
        let phi = DMatrix::from_fn(n, 4, |i, j| ((i * (j + 3)) % 7) as f64 + (i % 5) as f64 * j as f64);
        let u = build_sensing_matrix(n, n, 5).unwrap();
        let y = compress_matrix(&u, &phi, "w").unwrap();
        let raw = CompressedWindow::from_measurements("w", phi.clone(), n);
        let a = compressed_covariance(&y).unwrap();
        let b = compressed_covariance(&raw).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn orthonormal_principal_basis() {
        let y = DMatrix::from_fn(30, 5, |i, j| ((i * 13 + j * 7) % 11) as f64 * (j + 1) as f64);
        let s = principal_subspace(&CompressedWindow::from_measurements("o", y, 30), 0.9).unwrap();
        let e = s.principal();
        assert!((e.tr_mul(&e) - DMatrix::identity(s.k, s.k)).amax() < 1e-6);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rotation_keeps_eigenvalues() {
        let y = DMatrix::from_fn(20, 3, |i, j| ((i * 5 + j * 11) % 9) as f64 - j as f64);
        let (c, s) = (0.6f64, 0.8f64);
        let r = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let a = principal_subspace(&CompressedWindow::from_measurements("a", y.clone(), 20), 0.9).unwrap();
        let b = principal_subspace(&CompressedWindow::from_measurements("b", y * r, 20), 0.9).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    fn basis(seed: u64) -> DMatrix<f64> {
        let y = DMatrix::from_fn(40, 6, |i, j| {
            (((i as u64 * 31 + j as u64 * 17 + seed * 7) % 23) as f64) * (1.0 + j as f64)
        });
        principal_subspace(&CompressedWindow::from_measurements("p", y, 40), 0.7)
            .unwrap()
            .principal()
    }

    proptest! {
        #[test]
        fn projector_properties(seed in 0u64..50, x in proptest::collection::vec(-100.0f64..100.0, 6)) {
            let e = basis(seed);
            let x = DVector::from_vec(x);
            let z = residual_projection(&e, &x).unwrap();
            let zz = residual_projection(&e, &z).unwrap();
            prop_assert!((&zz - &z).amax() < 1e-9);
            prop_assert!(e.tr_mul(&z).amax() < 1e-9);
            let p = &e * e.tr_mul(&x);
            let lhs = x.norm_squared();
            let rhs = p.norm_squared() + z.norm_squared();
            prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs.max(1.0));
        }
    }
}
