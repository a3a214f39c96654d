use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::dataset::{derive_seed, generate_dataset, reference_window, TAG_SWEEP};
use super::metrics::{score, ClassificationMetrics, DetectionMetrics, WindowSummary};
use crate::anomaly::QStatParams;
use crate::assurance::{PathAssessment, Pipeline, StageTimings};
use crate::cs::{build_sensing_matrix, compress_matrix, min_measurements, reconstruct, reconstruction_mse, SensingMatrix};
use crate::error::{Error, Result};
use crate::signature::{max_pairwise_distance, BaselineProfile, Dendrogram, EntropyProfile};
use crate::traffic::{generate_baseline, inject_burst, store_window, EventWindow, TrafficConfig, WindowFormat};

/// File names inside a run directory.
pub mod files {
    pub const REPORT: &str = "report.json";
    pub const RUNTIME: &str = "runtime.json";
    pub const ARTIFACTS: &str = "artifacts";
    pub const REFERENCE: &str = "artifacts/reference.csv";
    pub const EXAMPLES: &str = "artifacts/examples";
    pub const ASSESSMENTS: &str = "artifacts/assessments.json";
    pub const PROFILE: &str = "artifacts/baseline_profile.json";
    pub const SWEEP: &str = "artifacts/sweep.json";
    pub const RECONSTRUCTION: &str = "artifacts/reconstruction.json";
    pub const DENDROGRAM: &str = "artifacts/dendrogram.json";
    pub const ENTROPY: &str = "artifacts/entropy.json";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub m: usize,
    /// One value per trial.
    pub mse: Vec<f64>,
    pub mse_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsMetrics {
    pub n: usize,
    pub m: usize,
    pub ratio: f64,
    pub coherence: f64,
    pub active_features: usize,
    /// `Const * mu^2 * Q * ln N` with `Q` the burst length; advisory.
    pub min_measurements: f64,
    pub meets_min_measurements: bool,
    pub log_base: String,
    pub sweep: Vec<SweepPoint>,
    pub mse_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub q: Option<QStatParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatingMetrics {
    pub enabled: bool,
    pub compared: bool,
    pub classified_gated: usize,
    pub classified_ungated: Option<usize>,
    /// Anomalous windows whose gated and ungated assessments differ.
    pub anomalous_mismatches: usize,
}

/// Deterministic part of a run; timings live in [`RuntimeReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub windows: usize,
    pub failed_windows: usize,
    pub detection: DetectionMetrics,
    pub classification: ClassificationMetrics,
    pub detector: DetectorSummary,
    pub cs: CsMetrics,
    pub gating: GatingMetrics,
    pub window_summaries: Vec<WindowSummary>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub compress: f64,
    pub detect: f64,
    pub classify: f64,
}

impl StageSeconds {
    fn add(&mut self, t: &StageTimings) {
        self.compress += t.compress.as_secs_f64();
        self.detect += t.detect.as_secs_f64();
        self.classify += t.classify.as_secs_f64();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowTiming {
    pub id: String,
    pub gated: StageSeconds,
    pub ungated: Option<StageSeconds>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub threads: usize,
    pub total_seconds: f64,
    pub pipeline_seconds: f64,
    pub gated: StageSeconds,
    pub ungated: Option<StageSeconds>,
    /// Gated over ungated classification time.
    pub classify_ratio: Option<f64>,
    /// `(ratio, seconds)` for the reconstruction sweep.
    pub sweep_seconds: Vec<(f64, f64)>,
    pub per_window: Vec<WindowTiming>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub runtime: RuntimeReport,
    pub assessments: Vec<PathAssessment>,
}

/// Original and recovered series of one feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionTrace {
    pub feature: String,
    pub ratio: f64,
    pub original: Vec<f64>,
    pub reconstructed: Vec<f64>,
}

fn sweep_window(cfg: &ExperimentConfig, traffic: &TrafficConfig, trial: usize) -> Result<EventWindow> {
    let seed = derive_seed(cfg.seed, TAG_SWEEP, trial as u64);
    let mut w = generate_baseline(&traffic.catalog, cfg.samples, seed)?.with_id(format!("sweep-{trial}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigs: Vec<_> = traffic.signatures.iter().collect();
    let sig = sigs[trial % sigs.len()];
    let len = cfg.injection.burst_len;
    let start = rng.random_range(0..=cfg.samples - len);
    inject_burst(&mut w, &traffic.catalog, sig, start, len, cfg.injection.intensity, &mut rng)?;
    Ok(w)
}

/// Deviation of the window from the baseline mean, `Phi - 1 mu^T`.
fn deviation(w: &EventWindow, profile: &BaselineProfile) -> DMatrix<f64> {
    let mut d = w.counts.to_f64();
    for (j, mut col) in d.column_iter_mut().enumerate() {
        col.add_scalar_mut(-profile.mean[j]);
    }
    d
}

/// Seed-averaged reconstruction error of burst windows across `M/N` ratios.
/// `(ratio, seconds)` per sweep point.
pub type SweepTimes = Vec<(f64, f64)>;

pub fn cs_sweep(
    cfg: &ExperimentConfig,
    traffic: &TrafficConfig,
    profile: &BaselineProfile,
) -> Result<(Vec<SweepPoint>, SweepTimes)> {
    let n = cfg.samples;
    let sparsity = cfg.injection.burst_len.min(n);
    let mut points = Vec::new();
    let mut seconds = Vec::new();
    let windows: Vec<DMatrix<f64>> = (0..cfg.cs_trials)
        .map(|t| sweep_window(cfg, traffic, t).map(|w| deviation(&w, profile)))
        .collect::<Result<_>>()?;
    for &ratio in &cfg.cs_ratios {
        let m = ((ratio * n as f64).round() as usize).clamp(1, n);
        let start = Instant::now();
        let mse: Vec<f64> = windows
            .par_iter()
            .enumerate()
            .map(|(t, d)| {
                let u = build_sensing_matrix(n, m, derive_seed(cfg.seed, TAG_SWEEP, 1000 + t as u64))?;
                let y = compress_matrix(&u, d, "sweep")?;
                reconstruction_mse(d, &reconstruct(&u, &y, sparsity)?)
            })
            .collect::<Result<_>>()?;
        seconds.push((ratio, start.elapsed().as_secs_f64()));
        let mse_mean = mse.iter().sum::<f64>() / mse.len() as f64;
        points.push(SweepPoint { ratio, m, mse, mse_mean });
    }
    Ok((points, seconds))
}

fn nonincreasing_in_ratio(points: &[SweepPoint]) -> bool {
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    sorted.windows(2).all(|w| w[1].mse_mean <= w[0].mse_mean)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn assess_all(pool: &rayon::ThreadPool, pipeline: &Pipeline, windows: &[EventWindow]) -> Vec<(PathAssessment, StageTimings)> {
    // collect keeps input order, which is id order
    pool.install(|| windows.par_iter().map(|w| pipeline.assess_timed(w)).collect())
}

/// Generate the dataset, assess every window, score against labels and,
/// when `output_dir` is set, write the report, timings and plot artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    cfg.validate()?;
    let traffic = cfg.traffic()?;
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir.join(files::EXAMPLES)).map_err(|e| Error::io(dir, e))?;
    }
    let threads = cfg.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    let reference = reference_window(cfg, &traffic)?;
    let windows = pool.install(|| generate_dataset(cfg, &traffic))?;
    let gated_cfg = cfg.pipeline.clone();
    let pipeline = Pipeline::new(gated_cfg, &reference, traffic.signatures.clone())?;

    let t_pipe = Instant::now();
    let gated = assess_all(&pool, &pipeline, &windows);
    let ungated = if cfg.compare_gating {
        let mut c = cfg.pipeline.clone();
        c.gating = !cfg.pipeline.gating;
        let other = Pipeline::with_sensing(c, pipeline.sensing().clone(), &reference, traffic.signatures.clone())?;
        Some((assess_all(&pool, &other, &windows), other.match_calls()))
    } else {
        None
    };
    let pipeline_seconds = t_pipe.elapsed().as_secs_f64();

    let failed = gated.iter().filter(|(a, _)| !a.failures.is_empty()).count();
    if failed > 0 {
        log::warn!("{failed} window(s) had stage failures and are excluded from rates");
    }
    let assessments: Vec<PathAssessment> = gated.iter().map(|(a, _)| a.clone()).collect();
    let (detection, classification, window_summaries) =
        score(&windows, &assessments, &traffic.signatures, &cfg.confidence_thresholds);

    let mut gated_secs = StageSeconds::default();
    let mut ungated_secs = ungated.as_ref().map(|_| StageSeconds::default());
    let mut per_window = Vec::with_capacity(windows.len());
    let mut mismatches = 0;
    for (i, (a, t)) in gated.iter().enumerate() {
        gated_secs.add(t);
        let mut wt = WindowTiming { id: a.window_id.clone(), gated: StageSeconds::default(), ungated: None };
        wt.gated.add(t);
        if let Some((u, _)) = &ungated {
            let (ua, ut) = &u[i];
            ungated_secs.as_mut().expect("ungated totals").add(ut);
            let mut s = StageSeconds::default();
            s.add(ut);
            wt.ungated = Some(s);
            if a.is_anomalous() && (a.anomaly != ua.anomaly || a.matches != ua.matches || a.assurance != ua.assurance) {
                mismatches += 1;
            }
        }
        per_window.push(wt);
    }
    let (gated_c, ungated_c) = if cfg.pipeline.gating {
        (gated_secs.classify, ungated_secs.map(|s| s.classify))
    } else {
        (ungated_secs.map_or(0.0, |s| s.classify), Some(gated_secs.classify))
    };
    let classify_ratio = ungated_c.filter(|&u| u > 0.0).map(|u| gated_c / u);

    let (sweep, sweep_seconds) = pool.install(|| cs_sweep(cfg, &traffic, pipeline.baseline()))?;
    let u: &SensingMatrix = pipeline.sensing();
    let min_m = min_measurements(u.coherence(), cfg.injection.burst_len as f64, cfg.samples, cfg.pipeline.sampler.const_c);
    let cs = CsMetrics {
        n: u.n(),
        m: u.m(),
        ratio: u.m() as f64 / u.n() as f64,
        coherence: u.coherence(),
        active_features: traffic.signatures.active_feature_count(),
        min_measurements: min_m,
        meets_min_measurements: u.m() as f64 >= min_m,
        log_base: "natural".into(),
        mse_monotone: nonincreasing_in_ratio(&sweep),
        sweep,
    };
    let spectrum = pipeline.detector().spectrum();
    let detector = DetectorSummary {
        k: spectrum.k,
        eigenvalues: spectrum.eigenvalues.clone(),
        q: pipeline.detector().q_stat().cloned(),
    };
    let (classified_gated, classified_ungated) = match &ungated {
        Some((_, calls)) if cfg.pipeline.gating => (pipeline.match_calls(), Some(*calls)),
        Some((_, calls)) => (*calls, Some(pipeline.match_calls())),
        None => (pipeline.match_calls(), None),
    };
    let gating = GatingMetrics {
        enabled: cfg.pipeline.gating,
        compared: cfg.compare_gating,
        classified_gated,
        classified_ungated,
        anomalous_mismatches: mismatches,
    };
    let mut echo = cfg.clone();
    echo.output_dir = None;
    let report = MetricsReport {
        config: echo,
        windows: windows.len(),
        failed_windows: failed,
        detection,
        classification,
        detector,
        cs,
        gating,
        window_summaries,
    };

    if let Some(dir) = &cfg.output_dir {
        write_artifacts(dir, cfg, &traffic, &pipeline, &reference, &windows, &assessments, &report)?;
    }
    let runtime = RuntimeReport {
        threads,
        total_seconds: started.elapsed().as_secs_f64(),
        pipeline_seconds,
        gated: gated_secs,
        ungated: ungated_secs,
        classify_ratio,
        sweep_seconds,
        per_window,
    };
    if let Some(dir) = &cfg.output_dir {
        write_json(&dir.join(files::RUNTIME), &runtime)?;
    }
    Ok(RunOutput { report, runtime, assessments })
}

#[allow(clippy::too_many_arguments)]
fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    traffic: &TrafficConfig,
    pipeline: &Pipeline,
    reference: &EventWindow,
    windows: &[EventWindow],
    assessments: &[PathAssessment],
    report: &MetricsReport,
) -> Result<()> {
    write_json(&dir.join(files::REPORT), report)?;
    store_window(reference, dir.join(files::REFERENCE), WindowFormat::Csv)?;
    write_json(&dir.join(files::PROFILE), pipeline.baseline())?;
    write_json(&dir.join(files::ASSESSMENTS), &assessments)?;
    write_json(&dir.join(files::SWEEP), &report.cs.sweep)?;

    // first single-suite window per suite
    for s in traffic.signatures.iter() {
        if let Some(w) = windows
            .iter()
            .find(|w| !w.labels.is_empty() && w.labels.iter().all(|l| l.suite == s.suite))
        {
            store_window(w, dir.join(files::EXAMPLES).join(format!("suite-{}.csv", s.suite)), WindowFormat::Csv)?;
        }
    }

    // first detected injected window drives the tree and entropy plots
    if let Some((w, _)) = windows
        .iter()
        .zip(assessments)
        .find(|(w, a)| w.is_labeled() && a.is_anomalous() && a.failures.is_empty())
    {
        let points = pipeline.baseline().normalize(&w.counts);
        let tree = Dendrogram::build(&points)?;
        #[derive(Serialize)]
        struct Tree<'a> {
            window_id: &'a str,
            delta: f64,
            dendrogram: &'a Dendrogram,
        }
        let delta = cfg.pipeline.matching.delta.unwrap_or_else(|| 0.5 * max_pairwise_distance(&points));
        write_json(&dir.join(files::DENDROGRAM), &Tree { window_id: &w.id, delta, dendrogram: &tree })?;
        let profile = EntropyProfile::new(pipeline.baseline().entropy, &w.counts)?;
        write_json(&dir.join(files::ENTROPY), &profile)?;
    }

    // reconstruction overlay at the pipeline's own measurement count
    let w = sweep_window(cfg, traffic, 0)?;
    let d = deviation(&w, pipeline.baseline());
    let y = compress_matrix(pipeline.sensing(), &d, &w.id)?;
    let rec = reconstruct(pipeline.sensing(), &y, cfg.injection.burst_len.min(cfg.samples))?;
    let suite = w.labels[0].suite;
    let feature = *traffic.signatures.get(suite).and_then(|s| s.features.iter().next()).ok_or(Error::UnknownSignature(suite))?;
    let j = feature.index();
    let mean = pipeline.baseline().mean[j];
    let trace = ReconstructionTrace {
        feature: feature.to_string(),
        ratio: report.cs.ratio,
        original: d.column(j).iter().map(|v| v + mean).collect(),
        reconstructed: rec.column(j).iter().map(|v| v + mean).collect(),
    };
    write_json(&dir.join(files::RECONSTRUCTION), &trace)?;
    Ok(())
}
