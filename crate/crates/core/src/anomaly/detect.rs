use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::qstat::{q_threshold_from, QForm, QStatParams};
use super::spectrum::{compressed_covariance, Spectrum};
use crate::cs::CompressedWindow;
use crate::error::{Error, Result};
use crate::traffic::FeatureId;

pub const DEFAULT_POWER_FRACTION: f64 = 0.9;
pub const DEFAULT_BETA: f64 = 0.1;

// SPE below this counts as zero when no threshold exists
const ZERO_SPE: f64 = 1e-9;

/// Outcome of scoring one compressed window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub window_id: String,
    /// Per-feature share of the mean residual energy; sums to `window_spe`.
    pub spe: Vec<f64>,
    pub window_spe: f64,
    /// `None` when the reference had no residual variance.
    pub threshold: Option<f64>,
    pub anomalous: bool,
    pub flagged_features: Vec<FeatureId>,
}

/// Residual-subspace detector fitted on a reference window.
///
/// Scores are the mean squared prediction error of a window's samples in
/// the reference residual subspace, `tr(P C P)` with `C` the window's
/// covariance and `P = I - E E^T`. Under the reference distribution the
/// score concentrates at `theta_1`; the window is anomalous when it
/// exceeds the per-sample limit `Q_beta`.
#[derive(Clone, Debug)]
pub struct AnomalyDetector {
    spectrum: Spectrum,
    q: Option<QStatParams>,
    projector: DMatrix<f64>,
    reference_spe: Vec<f64>,
    m: usize,
}

fn residual_diag(p: &DMatrix<f64>, cov: &DMatrix<f64>) -> Vec<f64> {
    let pc = p * cov * p;
    (0..pc.nrows()).map(|j| pc[(j, j)].max(0.0)).collect()
}

impl AnomalyDetector {
    pub fn fit(reference: &CompressedWindow, power_fraction: f64, beta: f64) -> Result<Self> {
        Self::fit_with_form(reference, power_fraction, beta, QForm::Canonical)
    }

    pub fn fit_with_form(
        reference: &CompressedWindow,
        power_fraction: f64,
        beta: f64,
        form: QForm,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta {beta} outside (0, 1)")));
        }
        let cov = compressed_covariance(reference)?;
        let spectrum = Spectrum::from_covariance(&cov, power_fraction)?;
        let q = match q_threshold_from(spectrum.residual_eigenvalues(), beta, form) {
            Ok(q) => Some(q),
            Err(Error::ThresholdUndefined(why)) => {
                log::warn!("{}: threshold undefined ({why}); any residual energy is anomalous", reference.source_window_id);
                None
            }
            Err(e) => return Err(e),
        };
        let projector = spectrum.residual_projector();
        let reference_spe = residual_diag(&projector, &cov);
        Ok(AnomalyDetector {
            spectrum,
            q,
            projector,
            reference_spe,
            m: reference.m(),
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn q_stat(&self) -> Option<&QStatParams> {
        self.q.as_ref()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.q.as_ref().map(|q| q.q_beta)
    }

    pub fn reference_spe(&self) -> &[f64] {
        &self.reference_spe
    }

    pub fn score(&self, y: &CompressedWindow) -> Result<AnomalyReport> {
        let d = self.spectrum.dim();
        if y.feature_count() != d || y.m() != self.m {
            return Err(Error::ShapeMismatch {
                op: "score",
                left: (self.m, d),
                right: (y.m(), y.feature_count()),
            });
        }
        let cov = compressed_covariance(y)?;
        let spe = residual_diag(&self.projector, &cov);
        let window_spe: f64 = spe.iter().sum();
        let (anomalous, margin) = match &self.q {
            Some(q) => (window_spe > q.q_beta, (q.q_beta - q.theta[0]) / d as f64),
            None => (window_spe > ZERO_SPE, 0.0),
        };
        let flagged_features = if anomalous {
            spe.iter()
                .zip(&self.reference_spe)
                .enumerate()
                .filter(|(_, (s, r))| *s - *r > margin.max(ZERO_SPE))
                .map(|(j, _)| FeatureId::from_index(j))
                .collect()
        } else {
            Vec::new()
        };
        Ok(AnomalyReport {
            window_id: y.source_window_id.clone(),
            spe,
            window_spe,
            threshold: self.threshold(),
            anomalous,
            flagged_features,
        })
    }
}

/// Score a window against its own spectrum.
///
/// A self-fitted window's residual energy equals `theta_1`, which is below
/// `Q_beta`, so this never alarms. Fit an [`AnomalyDetector`] on a reference window to
/// screen for anomalies.
pub fn detect(y: &CompressedWindow, power_fraction: f64, beta: f64) -> Result<AnomalyReport> {
    AnomalyDetector::fit(y, power_fraction, beta)?.score(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::{build_sensing_matrix, compress};
    use crate::traffic::{generate_baseline, inject_burst, FeatureCatalog, SignatureSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_window_not_anomalous() {
        let y = CompressedWindow::from_measurements("z", DMatrix::zeros(16, 19), 16);
        let r = detect(&y, 0.9, 0.1).unwrap();
        assert!(!r.anomalous);
        assert_eq!(r.window_spe, 0.0);
        assert!(r.threshold.is_none());
    }

    #[test]
    fn self_scored_window_sits_at_theta1() {
        let cat = FeatureCatalog::default();
        let u = build_sensing_matrix(256, 128, 1).unwrap();
        let y = compress(&u, &generate_baseline(&cat, 256, 3).unwrap()).unwrap();
        let det = AnomalyDetector::fit(&y, 0.9, 0.1).unwrap();
        let r = det.score(&y).unwrap();
        let q = det.q_stat().unwrap();
        assert!((r.window_spe - q.theta[0]).abs() < 1e-6 * q.theta[0]);
        assert!(!r.anomalous);
        assert!(r.spe.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn suite_two_burst_is_flagged() {
        let cat = FeatureCatalog::default();
        let sigs = SignatureSet::default();
        let n = 1024;
        let u = build_sensing_matrix(n, 610, 0).unwrap();
        let reference = compress(&u, &generate_baseline(&cat, n, 100).unwrap()).unwrap();
        let det = AnomalyDetector::fit(&reference, 0.9, 0.1).unwrap();
        let mut w = generate_baseline(&cat, n, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        inject_burst(&mut w, &cat, sigs.get(2).unwrap(), 300, 64, 8.0, &mut rng).unwrap();
        let r = det.score(&compress(&u, &w).unwrap()).unwrap();
        assert!(r.anomalous, "spe {} vs {:?}", r.window_spe, r.threshold);
        let suite: Vec<u16> = vec![1, 5, 6, 7, 8, 9];
        assert!(r.flagged_features.iter().any(|f| suite.contains(&f.number())));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let y = CompressedWindow::from_measurements("a", DMatrix::from_fn(8, 3, |i, j| (i * j) as f64), 8);
        let det = AnomalyDetector::fit(&y, 0.9, 0.1).unwrap();
        let other = CompressedWindow::from_measurements("b", DMatrix::zeros(8, 4), 8);
        assert!(det.score(&other).is_err());
    }
}
