//! Window files.
//!
//! CSV windows carry one row per sample moment under a `t,f1,...,f19`
//! header, with labels (and the window id/kind) in a JSON sidecar next to
//! the CSV: `window.csv` pairs with `window.labels.json`. A missing sidecar
//! means an unlabeled window named after the file stem.
//!
//! JSON windows are one document: `{id, kind, N, features[], rows[][], labels[]}`.
//! A missing `labels` array loads as no labels.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::catalog::{FeatureCatalog, FeatureId};
use super::window::{CountMatrix, EventWindow, InjectionRecord, WindowKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFormat {
    Csv,
    Json,
}

impl WindowFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(WindowFormat::Csv),
            Some("json") => Ok(WindowFormat::Json),
            _ => Err(Error::InvalidParameter(format!(
                "cannot infer window format from {}",
                path.display()
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            WindowFormat::Csv => "csv",
            WindowFormat::Json => "json",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<WindowKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    #[serde(default)]
    labels: Vec<InjectionRecord>,
}

#[derive(Serialize, Deserialize)]
struct WindowDoc {
    id: String,
    kind: WindowKind,
    #[serde(rename = "N")]
    n: usize,
    features: Vec<FeatureId>,
    rows: Vec<Vec<i64>>,
    #[serde(default)]
    labels: Vec<InjectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

/// Sidecar path for a CSV window.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("labels.json")
}

pub fn store_window(window: &EventWindow, path: impl AsRef<Path>, format: WindowFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        WindowFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            let mut header = vec!["t".to_string()];
            header.extend((0..window.feature_count()).map(|j| FeatureId::from_index(j).to_string()));
            w.write_record(&header)?;
            for (t, row) in window.counts.rows().enumerate() {
                let mut rec = vec![t.to_string()];
                rec.extend(row.iter().map(u32::to_string));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
            let sidecar = Sidecar {
                id: Some(window.id.clone()),
                kind: Some(window.kind),
                path: window.path.clone(),
                labels: window.labels.clone(),
            };
            let side = sidecar_path(path);
            fs::write(&side, serde_json::to_string_pretty(&sidecar)?)
                .map_err(|e| Error::io(&side, e))
        }
        WindowFormat::Json => {
            let doc = WindowDoc {
                id: window.id.clone(),
                kind: window.kind,
                n: window.samples(),
                features: (0..window.feature_count()).map(FeatureId::from_index).collect(),
                rows: window
                    .counts
                    .rows()
                    .map(|r| r.iter().map(|&v| v as i64).collect())
                    .collect(),
                labels: window.labels.clone(),
                path: window.path.clone(),
            };
            fs::write(path, serde_json::to_string(&doc)?).map_err(|e| Error::io(path, e))
        }
    }
}

pub fn load_window(
    path: impl AsRef<Path>,
    format: WindowFormat,
    catalog: &FeatureCatalog,
) -> Result<EventWindow> {
    let path = path.as_ref();
    match format {
        WindowFormat::Csv => load_csv(path, catalog),
        WindowFormat::Json => load_json(path, catalog),
    }
}

fn check_header(names: &[String], catalog: &FeatureCatalog) -> Result<()> {
    if names.len() != catalog.len() {
        return Err(Error::Schema(format!(
            "window has {} feature columns, catalog has {}",
            names.len(),
            catalog.len()
        )));
    }
    for (j, name) in names.iter().enumerate() {
        let expected = FeatureId::from_index(j).to_string();
        if *name != expected {
            return Err(Error::Schema(format!(
                "feature column {j} is `{name}`, expected `{expected}`"
            )));
        }
    }
    Ok(())
}

fn parse_count(text: &str, location: impl Fn() -> String) -> Result<u32> {
    let v: i64 = text.trim().parse().map_err(|_| Error::Parse {
        location: location(),
        message: format!("`{text}` is not an integer count"),
    })?;
    u32::try_from(v).map_err(|_| Error::Parse {
        location: location(),
        message: format!("count {v} out of range (must be >= 0)"),
    })
}

fn load_csv(path: &Path, catalog: &FeatureCatalog) -> Result<EventWindow> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse {
            location: format!("{} line 1", path.display()),
            message: "first column must be `t`".into(),
        });
    }
    check_header(&header[1..], catalog)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 2, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                location: format!("{} line {line}", path.display()),
                message: format!("expected {} fields, got {}", header.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, cell)| {
                parse_count(cell, || {
                    format!("{} line {line}, column {}", path.display(), header[j + 1])
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
    }
    let side = sidecar_path(path);
    let sidecar: Sidecar = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::from_str(&text)?
    } else {
        Sidecar {
            id: None,
            kind: None,
            path: None,
            labels: vec![],
        }
    };
    let kind = sidecar.kind.unwrap_or(if sidecar.labels.is_empty() {
        WindowKind::Baseline
    } else {
        WindowKind::Injected
    });
    let id = sidecar.id.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let mut w = EventWindow::new(id, kind, CountMatrix::from_rows(rows)?, sidecar.labels)?;
    w.path = sidecar.path;
    Ok(w)
}

fn load_json(path: &Path, catalog: &FeatureCatalog) -> Result<EventWindow> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: WindowDoc = serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: format!("{} line {}, column {}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    let names: Vec<String> = doc.features.iter().map(ToString::to_string).collect();
    check_header(&names, catalog)?;
    if doc.rows.len() != doc.n {
        return Err(Error::Schema(format!(
            "N = {} but {} rows present",
            doc.n,
            doc.rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(doc.rows.len());
    for (r, row) in doc.rows.iter().enumerate() {
        if row.len() != names.len() {
            return Err(Error::Schema(format!(
                "row {r} has {} values, expected {}",
                row.len(),
                names.len()
            )));
        }
        let parsed = row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                u32::try_from(v).map_err(|_| Error::Parse {
                    location: format!("{} rows[{r}][{j}] ({})", path.display(), names[j]),
                    message: format!("count {v} out of range (must be >= 0)"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(parsed);
    }
    let mut w = EventWindow::new(doc.id, doc.kind, CountMatrix::from_rows(rows)?, doc.labels)?;
    w.path = doc.path;
    Ok(w)
}
