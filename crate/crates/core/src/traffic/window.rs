use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minutes of traffic summarized by one window.
pub const WINDOW_MINUTES: u32 = 30;

/// Default number of sample moments per window.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Row-major `N x N_f` matrix of nonnegative feature counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CountMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Schema(format!(
                "row {i} has {} columns, expected {cols}",
                r.len()
            )));
        }
        let n = rows.len();
        Ok(CountMatrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u32) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    /// Per-column totals.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.rows() {
            for (s, &v) in sums.iter_mut().zip(row) {
                *s += v as f64;
            }
        }
        sums
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c) as f64)
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.rows().map(<[u32]>::to_vec).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Baseline,
    Injected,
}

impl WindowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::Baseline => "baseline",
            WindowKind::Injected => "injected",
        }
    }
}

/// Ground truth for one injected attack burst; `end` is inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub suite: u32,
    pub start: usize,
    pub end: usize,
}

impl InjectionRecord {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, row: usize) -> bool {
        (self.start..=self.end).contains(&row)
    }
}

/// One 30-minute window of feature-frequency samples for a path.
#[derive(Clone, Debug, PartialEq)]
pub struct EventWindow {
    pub id: String,
    pub kind: WindowKind,
    /// Path the traffic transited, when known.
    pub path: Option<String>,
    pub counts: CountMatrix,
    pub labels: Vec<InjectionRecord>,
}

impl EventWindow {
    pub fn new(
        id: impl Into<String>,
        kind: WindowKind,
        counts: CountMatrix,
        labels: Vec<InjectionRecord>,
    ) -> Result<Self> {
        let w = EventWindow {
            id: id.into(),
            kind,
            path: None,
            counts,
            labels,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.nrows() == 0 {
            return Err(Error::InvalidDimension("window has no samples".into()));
        }
        if let Some(l) = self
            .labels
            .iter()
            .find(|l| l.start > l.end || l.end >= self.counts.nrows())
        {
            return Err(Error::Schema(format!(
                "label {}..={} outside 0..{}",
                l.start,
                l.end,
                self.counts.nrows()
            )));
        }
        Ok(())
    }

    /// Number of sample moments `N`.
    pub fn samples(&self) -> usize {
        self.counts.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.counts.ncols()
    }

    pub fn duration_minutes(&self) -> u32 {
        WINDOW_MINUTES
    }

    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }
}
