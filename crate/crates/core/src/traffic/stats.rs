use serde::{Deserialize, Serialize};

use super::window::EventWindow;
use crate::error::{Error, Result};

/// Per-feature descriptive statistics of one window.
///
/// Standard deviations use the `N - 1` divisor. A constant column has
/// correlation 0 with every column, itself included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
}

pub fn window_stats(window: &EventWindow) -> Result<WindowStats> {
    let n = window.samples();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let p = window.feature_count();
    let x = window.counts.to_f64();
    let mean: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let mut cov = vec![vec![0.0; p]; p];
    for r in 0..n {
        for a in 0..p {
            let da = x[(r, a)] - mean[a];
            if da == 0.0 {
                continue;
            }
            for b in a..p {
                cov[a][b] += da * (x[(r, b)] - mean[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    let std_dev: Vec<f64> = (0..p).map(|j| (cov[j][j] / denom).sqrt()).collect();
    let mut correlation = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in a..p {
            let scale = (cov[a][a] * cov[b][b]).sqrt();
            let r = if scale > 0.0 {
                (cov[a][b] / scale).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            correlation[a][b] = r;
            correlation[b][a] = r;
        }
    }
    Ok(WindowStats {
        mean,
        std_dev,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{CountMatrix, WindowKind};

    fn window_from_columns(cols: &[&[u32]]) -> EventWindow {
        let n = cols[0].len();
        let rows = (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        EventWindow::new("t", WindowKind::Baseline, CountMatrix::from_rows(rows).unwrap(), vec![])
            .unwrap()
    }

    #[test]
    fn constant_column() {
        let w = window_from_columns(&[&[5, 5, 5, 5], &[1, 2, 3, 4]]);
        let s = window_stats(&w).unwrap();
        assert_eq!(s.mean[0], 5.0);
        assert_eq!(s.std_dev[0], 0.0);
        assert_eq!(s.correlation[0][0], 0.0);
        assert_eq!(s.correlation[0][1], 0.0);
        assert_eq!(s.correlation[1][1], 1.0);
    }

    #[test]
    fn identical_columns_correlate_fully() {
        let w = window_from_columns(&[&[1, 7, 3, 2], &[1, 7, 3, 2]]);
        let s = window_stats(&w).unwrap();
        assert!((s.correlation[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_pearson() {
        // a = 1,2,3,4 ; b = 2,4,5,9 ; c = 4,3,2,1
        // deviations: a (-1.5,-.5,.5,1.5), b (-3,-1,0,4)
        // r_ab = 11 / sqrt(5 * 26) = 0.964763821...
        let w = window_from_columns(&[&[1, 2, 3, 4], &[2, 4, 5, 9], &[4, 3, 2, 1]]);
        let s = window_stats(&w).unwrap();
        assert!((s.correlation[0][1] - 11.0 / 130f64.sqrt()).abs() < 1e-12);
        assert!((s.correlation[0][2] + 1.0).abs() < 1e-12);
        assert!((s.mean[1] - 5.0).abs() < 1e-12);
        // sd_b = sqrt(26 / 3)
        assert!((s.std_dev[1] - (26.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_row_is_rejected() {
        let w = window_from_columns(&[&[1], &[2]]);
        assert!(matches!(
            window_stats(&w),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        ));
    }
}
