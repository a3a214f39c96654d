use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::sensing::SensingMatrix;
use crate::error::{Error, Result};
use crate::traffic::EventWindow;

/// `Y = U_v * Phi` for one window, with enough sensing metadata to analyse
/// it without the original samples.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedWindow {
    pub source_window_id: String,
    /// `M x N_f` measurements.
    pub y: DMatrix<f64>,
    /// Original sample count `N`.
    pub n: usize,
    pub sensing_seed: Option<u64>,
    pub row_subset: Vec<usize>,
    /// `U_v * 1`; used to remove the time mean in the compressed domain.
    pub constant_image: Vec<f64>,
}

impl CompressedWindow {
    pub fn m(&self) -> usize {
        self.y.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.y.ncols()
    }

    /// Wrap raw measurements that did not come from [`compress`].
    pub fn from_measurements(id: impl Into<String>, y: DMatrix<f64>, n: usize) -> Self {
        let m = y.nrows();
        CompressedWindow {
            source_window_id: id.into(),
            y,
            n,
            sensing_seed: None,
            row_subset: (0..m).collect(),
            constant_image: vec![0.0; m],
        }
    }
}

pub fn compress(u: &SensingMatrix, window: &EventWindow) -> Result<CompressedWindow> {
    compress_matrix(u, &window.counts.to_f64(), &window.id)
}

/// Compress an arbitrary real `N x N_f` matrix.
pub fn compress_matrix(u: &SensingMatrix, phi: &DMatrix<f64>, id: &str) -> Result<CompressedWindow> {
    if u.n() != phi.nrows() {
        return Err(Error::ShapeMismatch {
            op: "compress",
            left: (u.m(), u.n()),
            right: (phi.nrows(), phi.ncols()),
        });
    }
    let y = u.matrix() * phi;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("compressed window"));
    }
    Ok(CompressedWindow {
        source_window_id: id.to_string(),
        y,
        n: u.n(),
        sensing_seed: u.seed(),
        row_subset: u.row_subset().to_vec(),
        constant_image: u.constant_image().to_vec(),
    })
}

#[derive(Serialize, Deserialize)]
struct Doc {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "N_f")]
    n_f: usize,
    sensing_seed: Option<u64>,
    row_subset: Vec<usize>,
    #[serde(rename = "Y")]
    y: Vec<Vec<f64>>,
    #[serde(default)]
    source_window_id: String,
    #[serde(default)]
    constant_image: Vec<f64>,
}

impl Serialize for CompressedWindow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Doc {
            m: self.m(),
            n: self.n,
            n_f: self.feature_count(),
            sensing_seed: self.sensing_seed,
            row_subset: self.row_subset.clone(),
            y: self
                .y
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            source_window_id: self.source_window_id.clone(),
            constant_image: self.constant_image.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CompressedWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = Doc::deserialize(d)?;
        if doc.y.len() != doc.m || doc.y.iter().any(|r| r.len() != doc.n_f) {
            return Err(D::Error::custom("Y does not have shape M x N_f"));
        }
        let constant_image = if doc.constant_image.is_empty() {
            vec![0.0; doc.m]
        } else if doc.constant_image.len() == doc.m {
            doc.constant_image
        } else {
            return Err(D::Error::custom("constant_image must have M entries"));
        };
        Ok(CompressedWindow {
            source_window_id: doc.source_window_id,
            y: DMatrix::from_fn(doc.m, doc.n_f, |r, c| doc.y[r][c]),
            n: doc.n,
            sensing_seed: doc.sensing_seed,
            row_subset: doc.row_subset,
            constant_image,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::build_sensing_matrix;
    use crate::traffic::{generate_baseline, CountMatrix, FeatureCatalog, WindowKind};

    #[test]
    fn identity_sensing_is_identity() {
        let w = generate_baseline(&FeatureCatalog::default(), 16, 1).unwrap();
        let c = compress(&SensingMatrix::identity(16), &w).unwrap();
        assert_eq!(c.y, w.counts.to_f64());
    }

    #[test]
    fn zero_window_compresses_to_zero() {
        let w = EventWindow::new(
            "z",
            WindowKind::Baseline,
            CountMatrix::zeros(32, 19),
            vec![],
        )
        .unwrap();
        let u = build_sensing_matrix(32, 8, 2).unwrap();
        let c = compress(&u, &w).unwrap();
        assert!(c.y.iter().all(|&v| v == 0.0));
        assert_eq!((c.m(), c.feature_count()), (8, 19));
    }

    #[test]
    fn hand_product() {
        // U = [[1,0,2,0],[0,1,0,-1],[1,1,1,1],[0,0,0,3]], Phi = [[1,2],[3,4],[5,6],[7,8]]
        // rows of U*Phi: [1+10, 2+12] = [11,14]; [3-7, 4-8] = [-4,-4];
        // [16, 20]; [21, 24]
        let u = DMatrix::from_row_slice(
            4,
            4,
            &[1., 0., 2., 0., 0., 1., 0., -1., 1., 1., 1., 1., 0., 0., 0., 3.],
        );
        let u = SensingMatrix::from_parts(u, vec![0, 1, 2, 3]).unwrap();
        let phi = DMatrix::from_row_slice(4, 2, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let c = compress_matrix(&u, &phi, "h").unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[11., 14., -4., -4., 16., 20., 21., 24.]);
        assert_eq!(c.y, expected);
    }

    #[test]
    fn dimension_mismatch_names_shapes() {
        let w = generate_baseline(&FeatureCatalog::default(), 16, 1).unwrap();
        let u = build_sensing_matrix(32, 8, 2).unwrap();
        let err = compress(&u, &w).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(8, 32)") && msg.contains("(16, 19)"), "{msg}");
    }

    #[test]
    fn json_schema_round_trip() {
        let w = generate_baseline(&FeatureCatalog::default(), 64, 1).unwrap();
        let u = build_sensing_matrix(64, 20, 2).unwrap();
        let c = compress(&u, &w).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["M", "N", "N_f", "sensing_seed", "row_subset", "Y"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: CompressedWindow = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
