use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assurance::PipelineConfig;
use crate::error::{Error, Result};
use crate::traffic::{InjectionParams, SignatureSet, TrafficConfig, DEFAULT_SAMPLES};

/// Everything a batch run depends on. Identical configs give identical
/// reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub windows: usize,
    pub samples: usize,
    pub seed: u64,
    /// Catalog plus signatures file; built-in tables when absent.
    pub traffic_config: Option<PathBuf>,
    /// Signature file overriding the one in `traffic_config`.
    pub signatures: Option<PathBuf>,
    /// Share of windows that receive attack bursts.
    pub attack_fraction: f64,
    /// `poisson_rate` is the expected burst count of an attacked window,
    /// which always gets at least one.
    pub injection: InjectionParams,
    pub pipeline: PipelineConfig,
    /// Also run every window ungated to measure the gating saving.
    pub compare_gating: bool,
    pub cs_ratios: Vec<f64>,
    pub cs_trials: usize,
    pub confidence_thresholds: Vec<f64>,
    /// Path ids assigned round-robin to windows.
    pub paths: Vec<String>,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            windows: 200,
            samples: DEFAULT_SAMPLES,
            seed: 7,
            traffic_config: None,
            signatures: None,
            attack_fraction: 0.5,
            injection: InjectionParams::default(),
            pipeline: PipelineConfig::default(),
            compare_gating: true,
            cs_ratios: vec![0.1, 0.2, 0.3, 0.5],
            cs_trials: 10,
            confidence_thresholds: vec![0.75, 0.9],
            paths: vec!["P_i".into(), "P_j".into()],
            threads: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.windows == 0 {
            return bad("windows must be positive".into());
        }
        if self.samples < 2 {
            return bad(format!("samples {} must be >= 2", self.samples));
        }
        if !(0.0..=1.0).contains(&self.attack_fraction) {
            return bad(format!("attack_fraction {} outside [0, 1]", self.attack_fraction));
        }
        let inj = &self.injection;
        if !(inj.poisson_rate >= 0.0 && inj.poisson_rate.is_finite()) {
            return bad("injection.poisson_rate must be >= 0".into());
        }
        if inj.burst_len == 0 || inj.burst_len > self.samples {
            return bad(format!("burst_len {} outside 1..={}", inj.burst_len, self.samples));
        }
        if !(inj.intensity > 0.0 && inj.intensity.is_finite()) {
            return bad("injection.intensity must be > 0".into());
        }
        if self.cs_trials == 0 {
            return bad("cs_trials must be positive".into());
        }
        if let Some(r) = self.cs_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("cs ratio {r} outside (0, 1]"));
        }
        if let Some(c) = self.confidence_thresholds.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return bad(format!("confidence threshold {c} outside [0, 1]"));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        let p = &self.pipeline;
        p.sampler.validate()?;
        if !(p.beta > 0.0 && p.beta < 1.0) {
            return bad(format!("beta {} outside (0, 1)", p.beta));
        }
        if !(p.power_fraction > 0.0 && p.power_fraction <= 1.0) {
            return bad(format!("power_fraction {} outside (0, 1]", p.power_fraction));
        }
        p.measurements(self.samples, 1)?;
        Ok(())
    }

    /// Catalog and signatures named by the config, checked against each other.
    pub fn traffic(&self) -> Result<TrafficConfig> {
        let mut t = match &self.traffic_config {
            Some(p) => TrafficConfig::load(p)?,
            None => TrafficConfig::default(),
        };
        if let Some(p) = &self.signatures {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            t.signatures = serde_json::from_str::<SignatureSet>(&text)?;
        }
        t.signatures.validate_against(&t.catalog)?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        let partial = ExperimentConfig::from_json(r#"{"windows": 4, "pipeline": {"beta": 0.05}}"#).unwrap();
        assert_eq!(partial.windows, 4);
        assert_eq!(partial.pipeline.beta, 0.05);
        assert_eq!(partial.pipeline.power_fraction, 0.9);
    }

    #[test]
    fn rejects_out_of_range() {
        for text in [
            r#"{"windows": 0}"#,
            r#"{"attack_fraction": 1.5}"#,
            r#"{"pipeline": {"beta": 1.0}}"#,
            r#"{"pipeline": {"ratio": 0.0}}"#,
            r#"{"cs_ratios": [0.1, 2.0]}"#,
            r#"{"injection": {"burst_len": 5000}}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn missing_traffic_file() {
        let c = ExperimentConfig {
            traffic_config: Some("/nonexistent/traffic.json".into()),
            ..ExperimentConfig::default()
        };
        assert!(matches!(c.traffic(), Err(Error::Io { .. })));
    }
}
