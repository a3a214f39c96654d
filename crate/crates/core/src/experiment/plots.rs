use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{files, MetricsReport, ReconstructionTrace, RuntimeReport, SweepPoint};
use crate::assurance::PathAssessment;
use crate::error::{Error, Result};
use crate::signature::{BaselineProfile, Dendrogram, EntropyProfile};
use crate::traffic::{load_window, EventWindow, FeatureCatalog, FeatureId, WindowFormat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmittedPlot {
    pub figure: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsentPlot {
    pub figure: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotManifest {
    pub files: Vec<EmittedPlot>,
    pub absent: Vec<AbsentPlot>,
}

/// A parsed plot CSV: header plus string cells.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotTable {
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        let col = self
            .column(name)
            .ok_or_else(|| Error::Schema(format!("no column `{name}`")))?;
        col.iter()
            .enumerate()
            .map(|(i, v)| {
                v.parse().map_err(|_| Error::Parse {
                    location: format!("row {} column {name}", i + 2),
                    message: format!("`{v}` is not a number"),
                })
            })
            .collect()
    }
}

pub fn read_plot_csv(path: impl AsRef<Path>) -> Result<PlotTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(PlotTable { header, rows })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

struct Emitter {
    out: PathBuf,
    manifest: PlotManifest,
}

impl Emitter {
    fn write(&mut self, figure: &str, file: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let path = self.out.join(file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.manifest.files.push(EmittedPlot { figure: figure.into(), file: file.into(), rows: rows.len() });
        Ok(())
    }

    fn absent(&mut self, figure: &str, reason: &str) {
        self.manifest.absent.push(AbsentPlot { figure: figure.into(), reason: reason.into() });
    }
}

fn shares(totals: &[f64]) -> Vec<f64> {
    let sum: f64 = totals.iter().sum();
    totals.iter().map(|t| if sum > 0.0 { 100.0 * t / sum } else { 0.0 }).collect()
}

fn burst_totals(w: &EventWindow) -> Vec<f64> {
    let mut totals = vec![0.0; w.feature_count()];
    for r in 0..w.samples() {
        if w.labels.iter().any(|l| l.contains(r)) {
            for (t, &c) in totals.iter_mut().zip(w.counts.row(r)) {
                *t += c as f64;
            }
        }
    }
    totals
}

fn burst_rows(w: &EventWindow) -> usize {
    (0..w.samples()).filter(|&r| w.labels.iter().any(|l| l.contains(r))).count()
}

/// Turn a run directory into one CSV per figure plus `manifest.json`.
pub fn emit_plots(run_dir: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<PlotManifest> {
    let run = run_dir.as_ref();
    let required = [
        files::REPORT,
        files::RUNTIME,
        files::REFERENCE,
        files::PROFILE,
        files::ASSESSMENTS,
        files::SWEEP,
        files::RECONSTRUCTION,
    ];
    let missing: Vec<String> = required
        .iter()
        .filter(|f| !run.join(f).exists())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let out = out_dir.as_ref();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut em = Emitter { out: out.to_path_buf(), manifest: PlotManifest::default() };

    let report: MetricsReport = read_json(&run.join(files::REPORT))?;
    let runtime: RuntimeReport = read_json(&run.join(files::RUNTIME))?;
    let traffic = report.config.traffic()?;
    let catalog: &FeatureCatalog = &traffic.catalog;
    let profile: BaselineProfile = read_json(&run.join(files::PROFILE))?;

    let reference = load_window(run.join(files::REFERENCE), WindowFormat::Csv, catalog)?;
    let totals = reference.counts.column_sums();
    let rows = totals
        .iter()
        .zip(shares(&totals))
        .enumerate()
        .map(|(j, (t, s))| vec![FeatureId::from_index(j).to_string(), t.to_string(), s.to_string()])
        .collect();
    em.write("baseline feature share", "baseline_feature_share.csv", &["feature", "count", "percent"], rows)?;

    let mut examples = Vec::new();
    for s in traffic.signatures.iter() {
        let p = run.join(files::EXAMPLES).join(format!("suite-{}.csv", s.suite));
        if p.exists() {
            examples.push((s, load_window(&p, WindowFormat::Csv, catalog)?));
        }
    }
    if examples.is_empty() {
        em.absent("injected feature share", "no injected windows in run");
        em.absent("attack signature profile", "no injected windows in run");
    } else {
        let mut share_rows = Vec::new();
        let mut profile_rows = Vec::new();
        for (sig, w) in &examples {
            let t = burst_totals(w);
            let n = burst_rows(w).max(1) as f64;
            for (j, (c, pct)) in t.iter().zip(shares(&t)).enumerate() {
                let f = FeatureId::from_index(j);
                share_rows.push(vec![sig.suite.to_string(), f.to_string(), c.to_string(), pct.to_string()]);
                let mean = c / n;
                let base = profile.mean[j];
                profile_rows.push(vec![
                    sig.suite.to_string(),
                    f.to_string(),
                    u8::from(sig.features.contains(&f)).to_string(),
                    mean.to_string(),
                    base.to_string(),
                    if base > 0.0 { (mean / base).to_string() } else { String::new() },
                ]);
            }
        }
        em.write("injected feature share", "injected_feature_share.csv", &["suite", "feature", "count", "percent"], share_rows)?;
        em.write(
            "attack signature profile",
            "signature_profile.csv",
            &["suite", "feature", "in_signature", "burst_mean", "baseline_mean", "ratio"],
            profile_rows,
        )?;
    }

    let trace: ReconstructionTrace = read_json(&run.join(files::RECONSTRUCTION))?;
    let rows = trace
        .original
        .iter()
        .zip(&trace.reconstructed)
        .enumerate()
        .map(|(t, (o, r))| vec![t.to_string(), o.to_string(), r.to_string()])
        .collect();
    em.write("reconstruction overlay", "reconstruction_overlay.csv", &["t", "original", "reconstructed"], rows)?;

    let sweep: Vec<SweepPoint> = read_json(&run.join(files::SWEEP))?;
    let rows = sweep
        .iter()
        .map(|p| {
            let lo = p.mse.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = p.mse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            vec![p.ratio.to_string(), p.m.to_string(), p.mse_mean.to_string(), lo.to_string(), hi.to_string()]
        })
        .collect();
    em.write("compression ratio vs MSE", "ratio_vs_mse.csv", &["ratio", "m", "mse_mean", "mse_min", "mse_max"], rows)?;
    let rows = runtime
        .sweep_seconds
        .iter()
        .map(|(r, s)| vec![r.to_string(), s.to_string()])
        .collect();
    em.write("compression ratio vs time", "ratio_vs_time.csv", &["ratio", "seconds"], rows)?;

    let assessments: Vec<PathAssessment> = read_json(&run.join(files::ASSESSMENTS))?;
    let mut rows = Vec::new();
    for a in &assessments {
        if let Some(r) = &a.anomaly {
            let th = r.threshold.map_or(String::new(), |t| t.to_string());
            for (j, s) in r.spe.iter().enumerate() {
                rows.push(vec![
                    a.window_id.clone(),
                    FeatureId::from_index(j).to_string(),
                    s.to_string(),
                    r.window_spe.to_string(),
                    th.clone(),
                    u8::from(r.anomalous).to_string(),
                ]);
            }
        }
    }
    em.write(
        "SPE vs threshold",
        "spe_vs_threshold.csv",
        &["window", "feature", "spe", "window_spe", "threshold", "anomalous"],
        rows,
    )?;

    let mut rows = vec![vec![
        "gated".to_string(),
        runtime.gated.classify.to_string(),
        report.gating.classified_gated.to_string(),
    ]];
    if let (Some(u), Some(n)) = (runtime.ungated, report.gating.classified_ungated) {
        rows.push(vec!["ungated".into(), u.classify.to_string(), n.to_string()]);
    }
    if !report.gating.enabled {
        rows.reverse();
        rows[0][0] = "gated".into();
        if rows.len() > 1 {
            rows[1][0] = "ungated".into();
        }
    }
    em.write("gated vs ungated runtime", "gating_runtime.csv", &["mode", "classify_seconds", "classified_windows"], rows)?;

    let tree_path = run.join(files::DENDROGRAM);
    if tree_path.exists() {
        #[derive(Deserialize)]
        struct Tree {
            dendrogram: Dendrogram,
        }
        let tree: Tree = read_json(&tree_path)?;
        let path = out.join("dendrogram.csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        tree.dendrogram.write_csv(file)?;
        em.manifest.files.push(EmittedPlot {
            figure: "dendrogram".into(),
            file: "dendrogram.csv".into(),
            rows: tree.dendrogram.merges.len(),
        });
    } else {
        em.absent("dendrogram", "no detected injected window");
    }
    let ent_path = run.join(files::ENTROPY);
    if ent_path.exists() {
        let p: EntropyProfile = read_json(&ent_path)?;
        let rows = p
            .conditional
            .iter()
            .zip(&p.probabilities)
            .map(|((f, h), prob)| {
                vec![
                    f.to_string(),
                    prob.to_string(),
                    h.map_or(String::new(), |h| h.to_string()),
                    p.baseline.to_string(),
                    u8::from(h.is_some_and(|h| h > p.baseline)).to_string(),
                ]
            })
            .collect();
        em.write(
            "feature entropy",
            "entropy_profile.csv",
            &["feature", "probability", "conditional_entropy", "baseline_entropy", "above_baseline"],
            rows,
        )?;
    } else {
        em.absent("feature entropy", "no detected injected window");
    }

    let manifest = em.manifest;
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
