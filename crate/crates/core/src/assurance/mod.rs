//! Threat scores, assurance factors, the multipath graph and the
//! per-window pipeline.

mod graph;
mod pipeline;
mod threat;

pub use graph::{path_throughput, EdgeFactors, LatestAssessment, MultipathGraph};
pub use pipeline::{PathAssessment, Pipeline, PipelineConfig, StageFailure, StageTimings};
pub use threat::{assurance_factor, threat_score, PathThreat, ThreatContribution, DEFAULT_I_MAX};
