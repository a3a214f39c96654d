//! Residual-subspace volume anomaly detection.

mod bounds;
mod detect;
mod qstat;
mod spectrum;

pub use bounds::{eigenvalue_drift_bound, false_alarm_bound};
pub use detect::{detect, AnomalyDetector, AnomalyReport, DEFAULT_BETA, DEFAULT_POWER_FRACTION};
pub use qstat::{q_threshold, q_threshold_from, QForm, QMethod, QStatParams};
pub use spectrum::{compressed_covariance, principal_subspace, residual_projection, Spectrum};
