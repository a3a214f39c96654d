use nalgebra::{DMatrix, DVector};

use super::compress::CompressedWindow;
use super::sensing::SensingMatrix;
use crate::error::{Error, Result};

/// Residual norm below which pursuit stops early.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Outcome of one orthogonal matching pursuit run.
#[derive(Clone, Debug)]
pub struct SparseRecovery {
    pub coefficients: DVector<f64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    /// `||y - U x||` before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
}

/// Orthogonal matching pursuit over the columns of `u`.
///
/// Picks at most `sparsity` atoms, the one most correlated with the current
/// residual each step (lowest index on ties), and refits by least squares on
/// the selected support. The residual norm sequence is non-increasing.
pub fn orthogonal_matching_pursuit(
    u: &DMatrix<f64>,
    y: &DVector<f64>,
    sparsity: usize,
    tolerance: f64,
) -> SparseRecovery {
    let (m, n) = u.shape();
    let mut support = Vec::new();
    // orthonormal basis of span(U_S), built by twice-applied Gram-Schmidt
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut residual = y.clone();
    let mut norms = vec![residual.norm()];
    let mut used = vec![false; n];
    let limit = sparsity.min(m).min(n);

    while support.len() < limit && residual.norm() > tolerance {
        let corr = u.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if used[j] {
                continue;
            }
            if best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((j, score)) = best else { break };
        if score <= f64::EPSILON * y.norm() {
            break;
        }
        let mut q = u.column(j).clone_owned();
        let norm0 = q.norm();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&q);
                q.axpy(-proj, b, 1.0);
            }
        }
        let qn = q.norm();
        used[j] = true;
        if qn <= 1e-10 * norm0.max(1.0) {
            // atom already in the span of the support
            continue;
        }
        q /= qn;
        let step = q.dot(&residual);
        residual.axpy(-step, &q, 1.0);
        basis.push(q);
        support.push(j);
        norms.push(residual.norm());
    }

    let mut coefficients = DVector::zeros(n);
    if !support.is_empty() {
        let a = DMatrix::from_fn(m, support.len(), |r, c| u[(r, support[c])]);
        let qr = a.clone().qr();
        let qty = qr.q().tr_mul(y);
        let x = qr
            .r()
            .solve_upper_triangular(&qty)
            .unwrap_or_else(|| a.svd(true, true).solve(y, 1e-12).expect("svd solve"));
        for (k, &j) in support.iter().enumerate() {
            coefficients[j] = x[k];
        }
    }
    SparseRecovery {
        coefficients,
        support,
        residual_norms: norms,
    }
}

/// Recover each column of `Phi` from `Y` with at most `sparsity` nonzeros.
///
/// `sparsity == 0` returns the zero matrix.
pub fn reconstruct(u: &SensingMatrix, y: &CompressedWindow, sparsity: usize) -> Result<DMatrix<f64>> {
    if u.m() != y.m() {
        return Err(Error::ShapeMismatch {
            op: "reconstruct",
            left: (u.m(), u.n()),
            right: (y.m(), y.feature_count()),
        });
    }
    if sparsity > u.n() {
        return Err(Error::InvalidParameter(format!(
            "sparsity {sparsity} exceeds N = {}",
            u.n()
        )));
    }
    let mut out = DMatrix::zeros(u.n(), y.feature_count());
    if sparsity == 0 {
        return Ok(out);
    }
    for (c, col) in y.y.column_iter().enumerate() {
        let rec = orthogonal_matching_pursuit(u.matrix(), &col.clone_owned(), sparsity, RESIDUAL_TOLERANCE);
        out.set_column(c, &rec.coefficients);
    }
    Ok(out)
}

/// Mean of squared entrywise differences.
pub fn reconstruction_mse(phi: &DMatrix<f64>, phi_hat: &DMatrix<f64>) -> Result<f64> {
    if phi.shape() != phi_hat.shape() {
        return Err(Error::ShapeMismatch {
            op: "reconstruction_mse",
            left: phi.shape(),
            right: phi_hat.shape(),
        });
    }
    if phi.is_empty() {
        return Ok(0.0);
    }
    Ok((phi - phi_hat).norm_squared() / phi.len() as f64)
}
