use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::spectrum::Spectrum;
use crate::error::{Error, Result};

/// Which closed form of the Q-statistic limit to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QForm {
    /// Jackson and Mudholkar: `h0 = 1 - 2 t1 t3 / (3 t2^2)` with the `+1` term.
    #[default]
    Canonical,
    /// Variant with `h0 = 1 - 2 t3 / t1` and no `+1` term, kept for comparison.
    Printed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QMethod {
    ClosedForm,
    /// `g * chi2_h(1 - beta)` with `g = t2/t1`, `h = t1^2/t2`; used when the
    /// closed form is undefined (`h0 <= 0` or a non-positive bracket).
    ScaledChiSquare,
}

/// Q-statistic limit with its intermediates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QStatParams {
    pub theta: [f64; 3],
    pub h0: f64,
    pub c_beta: f64,
    pub beta: f64,
    pub q_beta: f64,
    pub form: QForm,
    pub method: QMethod,
}

/// Q limit from raw residual eigenvalues.
pub fn q_threshold_from(residual: &[f64], beta: f64, form: QForm) -> Result<QStatParams> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta {beta} outside (0, 1)")));
    }
    let scale = residual.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let live: Vec<f64> = residual.iter().copied().filter(|&l| l > 1e-12 * scale && l > 0.0).collect();
    if live.is_empty() {
        return Err(Error::ThresholdUndefined("no positive residual eigenvalues".into()));
    }
    let theta = [1, 2, 3].map(|i| live.iter().map(|l| l.powi(i)).sum::<f64>());
    let [t1, t2, t3] = theta;
    let c_beta = Normal::standard().inverse_cdf(1.0 - beta);
    let (h0, plus_one) = match form {
        QForm::Canonical => (1.0 - 2.0 * t1 * t3 / (3.0 * t2 * t2), 1.0),
        QForm::Printed => (1.0 - 2.0 * t3 / t1, 0.0),
    };
    let bracket = c_beta * (2.0 * t2 * h0 * h0).sqrt() / t1 + plus_one + t2 * h0 * (h0 - 1.0) / (t1 * t1);
    let (q_beta, method) = if h0 > 0.0 && bracket > 0.0 {
        (t1 * bracket.powf(1.0 / h0), QMethod::ClosedForm)
    } else {
        let g = t2 / t1;
        let h = t1 * t1 / t2;
        let chi = ChiSquared::new(h).map_err(|e| Error::ThresholdUndefined(e.to_string()))?;
        (g * chi.inverse_cdf(1.0 - beta), QMethod::ScaledChiSquare)
    };
    if !q_beta.is_finite() {
        return Err(Error::NonFinite("Q threshold"));
    }
    Ok(QStatParams {
        theta,
        h0,
        c_beta,
        beta,
        q_beta,
        form,
        method,
    })
}

/// Q limit over the residual part of `spectrum`, canonical form.
pub fn q_threshold(spectrum: &Spectrum, beta: f64) -> Result<QStatParams> {
    q_threshold_from(spectrum.residual_eigenvalues(), beta, QForm::Canonical)
}
