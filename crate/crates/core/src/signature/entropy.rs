use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traffic::{CountMatrix, FeatureId};

/// Shannon entropy in bits of the distribution proportional to `totals`.
pub fn entropy_bits(totals: &[f64]) -> Result<f64> {
    let sum: f64 = totals.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::EntropyUndefined("feature counts sum to zero".into()));
    }
    let h = totals
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / sum;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Feature distribution entropy `H(F)` of a whole window.
pub fn baseline_entropy(counts: &CountMatrix) -> Result<f64> {
    entropy_bits(&counts.column_sums())
}

pub(crate) fn median(mut xs: Vec<u32>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] as f64 + xs[n / 2] as f64) / 2.0
    }
}

/// Per-feature medians over all rows of the window.
pub fn column_medians(counts: &CountMatrix) -> Vec<f64> {
    (0..counts.ncols()).map(|j| median(counts.column(j).collect())).collect()
}

/// Entropy of the feature distribution over `rows` where feature `k`
/// exceeds `threshold`.
pub fn conditional_entropy_within(
    counts: &CountMatrix,
    rows: &[usize],
    k: FeatureId,
    threshold: f64,
) -> Result<f64> {
    let j = k.index();
    if j >= counts.ncols() {
        return Err(Error::InvalidParameter(format!("{k} not present in window")));
    }
    let mut totals = vec![0.0; counts.ncols()];
    let mut hits = 0;
    for &r in rows {
        let row = counts.row(r);
        if row[j] as f64 > threshold {
            hits += 1;
            for (t, &c) in totals.iter_mut().zip(row) {
                *t += c as f64;
            }
        }
    }
    if hits == 0 {
        return Err(Error::EntropyUndefined(format!("no rows with {k} above {threshold}")));
    }
    entropy_bits(&totals)
}

/// `H(F' | f'_k)`: entropy over the rows where `f'_k` is above its window
/// median.
pub fn conditional_entropy(counts: &CountMatrix, k: FeatureId) -> Result<f64> {
    let j = k.index();
    if j >= counts.ncols() {
        return Err(Error::InvalidParameter(format!("{k} not present in window")));
    }
    let rows: Vec<usize> = (0..counts.nrows()).collect();
    conditional_entropy_within(counts, &rows, k, median(counts.column(j).collect()))
}

/// Baseline entropy and per-feature conditional entropies for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub baseline: f64,
    /// `None` where the conditioning event never occurs.
    pub conditional: Vec<(FeatureId, Option<f64>)>,
    pub probabilities: Vec<f64>,
}

impl EntropyProfile {
    pub fn new(baseline: f64, counts: &CountMatrix) -> Result<Self> {
        let totals = counts.column_sums();
        let sum: f64 = totals.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::EntropyUndefined("feature counts sum to zero".into()));
        }
        let conditional = (0..counts.ncols())
            .map(|j| {
                let f = FeatureId::from_index(j);
                (f, conditional_entropy(counts, f).ok())
            })
            .collect();
        Ok(EntropyProfile {
            baseline,
            conditional,
            probabilities: totals.iter().map(|t| t / sum).collect(),
        })
    }
}
