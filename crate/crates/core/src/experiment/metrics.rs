use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assurance::PathAssessment;
use crate::traffic::{EventWindow, SignatureSet};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    /// Injected bursts.
    pub instances: usize,
    /// Bursts in windows flagged anomalous.
    pub detected: usize,
    pub false_neg: usize,
    /// Windows matched to this suite at the primary confidence without
    /// carrying it.
    pub false_pos: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub instances: usize,
    pub detected: usize,
    pub false_neg: usize,
    /// `None` without any injected burst.
    pub detection_rate: Option<f64>,
    pub labeled_windows: usize,
    pub detected_windows: usize,
    pub unlabeled_windows: usize,
    pub false_pos_windows: usize,
    pub true_neg_windows: usize,
    pub false_pos_rate: Option<f64>,
    pub per_suite: BTreeMap<u32, SuiteMetrics>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceLevel {
    pub threshold: f64,
    pub classified: usize,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    /// Detected injected windows handed to signature matching.
    pub forwarded: usize,
    /// Correct at the primary (first) threshold.
    pub classified_high_conf: usize,
    pub accuracy: Option<f64>,
    pub levels: Vec<ConfidenceLevel>,
    /// Mean best probability reached for each injected suite.
    pub avg_threat_accuracy: Option<f64>,
}

/// Per-window line of the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub id: String,
    pub path: Option<String>,
    pub injected_suites: Vec<u32>,
    pub bursts: usize,
    pub anomalous: bool,
    pub window_spe: Option<f64>,
    pub classified: bool,
    pub matches: Vec<(u32, f64)>,
    pub threat: f64,
    pub assurance: f64,
    pub correct: Option<bool>,
    pub failed: bool,
}

/// Suites carried by `window`, ascending.
pub fn injected_suites(window: &EventWindow) -> BTreeSet<u32> {
    window.labels.iter().map(|l| l.suite).collect()
}

/// Every injected suite matched at `threshold` and no other suite matched
/// at `threshold`.
pub fn window_correct(window: &EventWindow, a: &PathAssessment, signatures: &SignatureSet, threshold: f64) -> bool {
    let injected = injected_suites(window);
    signatures.iter().all(|s| {
        let hit = a.matches.best_for(s.suite) >= threshold;
        hit == injected.contains(&s.suite)
    })
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Score assessments against ground-truth labels. Windows with stage
/// failures are left out of every rate.
pub fn score(
    windows: &[EventWindow],
    assessments: &[PathAssessment],
    signatures: &SignatureSet,
    thresholds: &[f64],
) -> (DetectionMetrics, ClassificationMetrics, Vec<WindowSummary>) {
    let primary = thresholds.first().copied().unwrap_or(0.75);
    let mut det = DetectionMetrics::default();
    for s in signatures.iter() {
        det.per_suite.insert(s.suite, SuiteMetrics::default());
    }
    let mut cls = ClassificationMetrics {
        levels: thresholds
            .iter()
            .map(|&t| ConfidenceLevel { threshold: t, ..ConfidenceLevel::default() })
            .collect(),
        ..ClassificationMetrics::default()
    };
    let mut prob_sum = 0.0;
    let mut prob_n = 0usize;
    let mut summaries = Vec::with_capacity(windows.len());

    for (w, a) in windows.iter().zip(assessments) {
        debug_assert_eq!(w.id, a.window_id);
        let failed = !a.failures.is_empty();
        let injected = injected_suites(w);
        let anomalous = a.is_anomalous();
        let mut correct = None;
        if !failed {
            if w.is_labeled() {
                det.labeled_windows += 1;
                for l in &w.labels {
                    let s = det.per_suite.entry(l.suite).or_default();
                    s.instances += 1;
                    det.instances += 1;
                    if anomalous {
                        s.detected += 1;
                        det.detected += 1;
                    } else {
                        s.false_neg += 1;
                        det.false_neg += 1;
                    }
                }
                if anomalous {
                    det.detected_windows += 1;
                    cls.forwarded += 1;
                    for (lvl, &t) in cls.levels.iter_mut().zip(thresholds) {
                        if window_correct(w, a, signatures, t) {
                            lvl.classified += 1;
                        }
                    }
                    let ok = window_correct(w, a, signatures, primary);
                    correct = Some(ok);
                    for s in &injected {
                        prob_sum += a.matches.best_for(*s);
                        prob_n += 1;
                    }
                }
            } else {
                det.unlabeled_windows += 1;
                if anomalous {
                    det.false_pos_windows += 1;
                } else {
                    det.true_neg_windows += 1;
                }
            }
            for s in signatures.iter() {
                if !injected.contains(&s.suite) && a.matches.best_for(s.suite) >= primary {
                    det.per_suite.entry(s.suite).or_default().false_pos += 1;
                }
            }
        }
        let mut matches: Vec<(u32, f64)> = Vec::new();
        for s in signatures.iter() {
            let p = a.matches.best_for(s.suite);
            if p > 0.0 {
                matches.push((s.suite, p));
            }
        }
        summaries.push(WindowSummary {
            id: w.id.clone(),
            path: w.path.clone(),
            injected_suites: injected.into_iter().collect(),
            bursts: w.labels.len(),
            anomalous,
            window_spe: a.anomaly.as_ref().map(|r| r.window_spe),
            classified: a.classified,
            matches,
            threat: a.threat.score,
            assurance: a.assurance,
            correct,
            failed,
        });
    }
    det.detection_rate = rate(det.detected, det.instances);
    det.false_pos_rate = rate(det.false_pos_windows, det.unlabeled_windows);
    for lvl in &mut cls.levels {
        lvl.accuracy = rate(lvl.classified, cls.forwarded);
    }
    cls.classified_high_conf = cls.levels.first().map_or(0, |l| l.classified);
    cls.accuracy = rate(cls.classified_high_conf, cls.forwarded);
    cls.avg_threat_accuracy = (prob_n > 0).then(|| prob_sum / prob_n as f64);
    (det, cls, summaries)
}
