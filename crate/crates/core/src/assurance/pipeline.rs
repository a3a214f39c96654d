use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::threat::{threat_score, PathThreat, DEFAULT_I_MAX};
use crate::anomaly::{AnomalyDetector, AnomalyReport, QForm, DEFAULT_BETA, DEFAULT_POWER_FRACTION};
use crate::cs::{build_sensing_matrix, choose_measurement_count, compress, CompressedWindow, SamplerConfig, SensingMatrix};
use crate::error::{Error, Result};
use crate::signature::{signature_match_prob, BaselineProfile, MatchParams, MatchTriple};
use crate::traffic::{EventWindow, SignatureSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    /// Fixed `M/N`; overrides the `epsilon` rule when set.
    pub ratio: Option<f64>,
    pub power_fraction: f64,
    pub beta: f64,
    pub q_form: QForm,
    pub matching: MatchParams,
    /// Skip signature matching for windows that are not anomalous.
    pub gating: bool,
    pub i_max: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sampler: SamplerConfig::default(),
            ratio: None,
            power_fraction: DEFAULT_POWER_FRACTION,
            beta: DEFAULT_BETA,
            q_form: QForm::Canonical,
            matching: MatchParams::default(),
            gating: true,
            i_max: DEFAULT_I_MAX,
        }
    }
}

impl PipelineConfig {
    /// Measurement count for windows of `n` samples.
    pub fn measurements(&self, n: usize, active_features: usize) -> Result<usize> {
        match self.ratio {
            Some(r) if r > 0.0 && r <= 1.0 => Ok(((r * n as f64).round() as usize).clamp(1, n)),
            Some(r) => Err(Error::InvalidParameter(format!("ratio {r} outside (0, 1]"))),
            None => choose_measurement_count(n, active_features, &self.sampler),
        }
    }
}

/// A stage error kept in the assessment instead of aborting a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

impl StageFailure {
    fn new(stage: &str, e: &Error) -> Self {
        StageFailure {
            stage: stage.into(),
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

/// Result of running one window through the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathAssessment {
    pub window_id: String,
    pub path_id: Option<String>,
    pub anomaly: Option<AnomalyReport>,
    /// Whether signature matching ran.
    pub classified: bool,
    pub matches: MatchTriple,
    pub threat: PathThreat,
    pub assurance: f64,
    pub failures: Vec<StageFailure>,
}

impl PathAssessment {
    pub fn is_anomalous(&self) -> bool {
        self.anomaly.as_ref().is_some_and(|a| a.anomalous)
    }
}

/// Wall-clock time per stage for one window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub compress: Duration,
    pub detect: Duration,
    pub classify: Duration,
}

/// Sensing matrix, fitted detector, baseline profile and signatures bound
/// together for per-window assessment. Safe to share across threads.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    sensing: SensingMatrix,
    detector: AnomalyDetector,
    baseline: BaselineProfile,
    signatures: SignatureSet,
    detect_calls: AtomicUsize,
    match_calls: AtomicUsize,
    store: Mutex<BTreeMap<String, CompressedWindow>>,
}

impl Pipeline {
    /// Fit on a clean reference window.
    pub fn new(config: PipelineConfig, reference: &EventWindow, signatures: SignatureSet) -> Result<Self> {
        config.sampler.validate()?;
        let n = reference.samples();
        let m = config.measurements(n, signatures.active_feature_count())?;
        let sensing = build_sensing_matrix(n, m, config.sampler.seed)?;
        Self::with_sensing(config, sensing, reference, signatures)
    }

    pub fn with_sensing(
        config: PipelineConfig,
        sensing: SensingMatrix,
        reference: &EventWindow,
        signatures: SignatureSet,
    ) -> Result<Self> {
        let y = compress(&sensing, reference)?;
        let detector = AnomalyDetector::fit_with_form(&y, config.power_fraction, config.beta, config.q_form)?;
        let baseline = BaselineProfile::from_window(reference)?;
        Ok(Pipeline {
            config,
            sensing,
            detector,
            baseline,
            signatures,
            detect_calls: AtomicUsize::new(0),
            match_calls: AtomicUsize::new(0),
            store: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn sensing(&self) -> &SensingMatrix {
        &self.sensing
    }

    pub fn detector(&self) -> &AnomalyDetector {
        &self.detector
    }

    pub fn baseline(&self) -> &BaselineProfile {
        &self.baseline
    }

    pub fn signatures(&self) -> &SignatureSet {
        &self.signatures
    }

    pub fn set_gating(&mut self, gating: bool) {
        self.config.gating = gating;
    }

    pub fn detect_calls(&self) -> usize {
        self.detect_calls.load(Ordering::Relaxed)
    }

    pub fn match_calls(&self) -> usize {
        self.match_calls.load(Ordering::Relaxed)
    }

    pub fn stored(&self) -> usize {
        self.store.lock().expect("store lock").len()
    }

    pub fn stored_window(&self, id: &str) -> Option<CompressedWindow> {
        self.store.lock().expect("store lock").get(id).cloned()
    }

    pub fn assess(&self, window: &EventWindow) -> PathAssessment {
        self.assess_timed(window).0
    }

    /// Compress, detect and, when anomalous or ungated, match signatures.
    pub fn assess_timed(&self, window: &EventWindow) -> (PathAssessment, StageTimings) {
        let mut timings = StageTimings::default();
        let mut failures = Vec::new();

        let t = Instant::now();
        let compressed = compress(&self.sensing, window);
        timings.compress = t.elapsed();

        let t = Instant::now();
        let anomaly = match &compressed {
            Ok(y) => {
                self.detect_calls.fetch_add(1, Ordering::Relaxed);
                self.detector
                    .score(y)
                    .map_err(|e| failures.push(StageFailure::new("detect", &e)))
                    .ok()
            }
            Err(e) => {
                failures.push(StageFailure::new("compress", e));
                None
            }
        };
        timings.detect = t.elapsed();
        if let Ok(y) = compressed {
            self.store.lock().expect("store lock").insert(window.id.clone(), y);
        }

        let anomalous = anomaly.as_ref().is_some_and(|a| a.anomalous);
        let classified = anomalous || !self.config.gating;
        let mut matches = MatchTriple::default();
        let t = Instant::now();
        if classified {
            self.match_calls.fetch_add(1, Ordering::Relaxed);
            match signature_match_prob(&self.signatures, &window.counts, &self.baseline, &self.config.matching) {
                Ok(m) => matches = m,
                Err(e) => failures.push(StageFailure::new("classify", &e)),
            }
        }
        timings.classify = t.elapsed();

        let threat = match threat_score(window.path.as_deref(), &matches.matches, &self.signatures) {
            Ok(t) => t,
            Err(e) => {
                failures.push(StageFailure::new("threat", &e));
                PathThreat {
                    path_id: window.path.clone(),
                    ..PathThreat::default()
                }
            }
        };
        let assurance = threat.assurance(self.config.i_max);
        let assessment = PathAssessment {
            window_id: window.id.clone(),
            path_id: window.path.clone(),
            anomaly,
            classified,
            matches,
            threat,
            assurance,
            failures,
        };
        (assessment, timings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{generate_baseline, inject_burst, FeatureCatalog};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pipeline(n: usize) -> Pipeline {
        let cat = FeatureCatalog::default();
        let reference = generate_baseline(&cat, n, 999).unwrap();
        Pipeline::new(PipelineConfig::default(), &reference, SignatureSet::default()).unwrap()
    }

    #[test]
    fn baseline_window_is_not_classified() {
        let p = pipeline(1024);
        let w = generate_baseline(&FeatureCatalog::default(), 1024, 5).unwrap();
        let a = p.assess(&w);
        assert!(!a.is_anomalous());
        assert!(!a.classified);
        assert!(a.matches.is_empty());
        assert_eq!(a.assurance, 1.0);
        assert_eq!(p.match_calls(), 0);
        assert_eq!(p.detect_calls(), 1);
        assert_eq!(p.stored(), 1);
        assert!(a.failures.is_empty());
    }

    #[test]
    fn suite_two_end_to_end() {
        let p = pipeline(1024);
        let cat = FeatureCatalog::default();
        let sigs = SignatureSet::default();
        let mut w = generate_baseline(&cat, 1024, 6).unwrap().with_id("w6");
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        inject_burst(&mut w, &cat, sigs.get(2).unwrap(), 500, 64, 8.0, &mut rng).unwrap();
        let a = p.assess(&w);
        assert!(a.is_anomalous());
        assert!(a.matches.best_for(2) >= 0.8, "{:?}", a.matches.matches);
        assert!(a.assurance <= 0.25);
        assert_eq!(p.match_calls(), 1);

        // a second independent burst lowers assurance further
        inject_burst(&mut w, &cat, sigs.get(1).unwrap(), 100, 64, 8.0, &mut rng).unwrap();
        let b = p.assess(&w);
        assert!(b.assurance < a.assurance, "{} vs {}", b.assurance, a.assurance);
        assert_eq!(p.stored(), 1);
    }

    #[test]
    fn wrong_width_is_recorded_not_raised() {
        let p = pipeline(256);
        let w = generate_baseline(&FeatureCatalog::default(), 128, 1).unwrap();
        let a = p.assess(&w);
        assert_eq!(a.failures.len(), 1);
        assert_eq!(a.failures[0].stage, "compress");
        assert_eq!(p.stored(), 0);
    }

    #[test]
    fn ratio_override() {
        let c = PipelineConfig { ratio: Some(0.3), ..PipelineConfig::default() };
        assert_eq!(c.measurements(1024, 11).unwrap(), 307);
        assert_eq!(PipelineConfig::default().measurements(1024, 11).unwrap(), 610);
        let bad = PipelineConfig { ratio: Some(1.5), ..PipelineConfig::default() };
        assert!(bad.measurements(1024, 11).is_err());
    }
}
