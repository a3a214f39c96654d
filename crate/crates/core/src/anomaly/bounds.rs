use crate::error::{Error, Result};

fn check(m: usize, conf: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be positive".into()));
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence {conf} outside (0, 1)")));
    }
    Ok(())
}

/// `sqrt(n_v/M) + sqrt(2 ln(1/conf) / M)`, the false-alarm rate up to its
/// unspecified constant.
pub fn false_alarm_bound(n_v: usize, m: usize, conf: f64) -> Result<f64> {
    check(m, conf)?;
    let m = m as f64;
    Ok((n_v as f64 / m).sqrt() + (2.0 * (1.0 / conf).ln() / m).sqrt())
}

/// Largest expected gap between eigenvalues of the compressed and the
/// original covariance: `4 sqrt(2 lambda1) * false_alarm_bound`.
pub fn eigenvalue_drift_bound(lambda1: f64, n_v: usize, m: usize, conf: f64) -> Result<f64> {
    if !(lambda1 >= 0.0) || !lambda1.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda1 {lambda1} must be finite and >= 0")));
    }
    Ok(4.0 * (2.0 * lambda1).sqrt() * false_alarm_bound(n_v, m, conf)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_examples() {
        assert_eq!(eigenvalue_drift_bound(0.0, 4, 100, 0.1).unwrap(), 0.0);
        let b = eigenvalue_drift_bound(2.0, 4, 100, 0.1).unwrap();
        assert!((b - 3.3167).abs() < 1e-4, "{b}");
        let mut last = f64::INFINITY;
        for m in [10, 50, 100, 1000] {
            let b = eigenvalue_drift_bound(2.0, 4, m, 0.1).unwrap();
            assert!(b < last);
            last = b;
        }
        assert!(eigenvalue_drift_bound(-1.0, 4, 10, 0.1).is_err());
        assert!(eigenvalue_drift_bound(1.0, 4, 0, 0.1).is_err());
    }

    #[test]
    fn false_alarm_examples() {
        let b = false_alarm_bound(4, 64, 0.1).unwrap();
        assert!((b - 0.5183).abs() < 1e-4, "{b}");
        let d = false_alarm_bound(4, 128, 0.1).unwrap();
        assert!((d - b / 2f64.sqrt()).abs() < 1e-12);
        assert!(false_alarm_bound(4, 100_000_000, 0.1).unwrap() < 1e-3);
        assert!(false_alarm_bound(4, 10, 1.0).is_err());
    }
}
