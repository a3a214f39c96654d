//! Seeded batch runs: dataset generation, scoring against labels, the
//! reconstruction sweep and plot data.

mod config;
mod dataset;
mod metrics;
mod plots;
mod run;

pub use config::ExperimentConfig;
pub use dataset::{dataset_window, derive_seed, generate_dataset, reference_window};
pub use metrics::{
    injected_suites, score, window_correct, ClassificationMetrics, ConfidenceLevel, DetectionMetrics,
    SuiteMetrics, WindowSummary,
};
pub use plots::{emit_plots, read_plot_csv, AbsentPlot, EmittedPlot, PlotManifest, PlotTable};
pub use run::{
    cs_sweep, files, run_experiment, CsMetrics, DetectorSummary, GatingMetrics, MetricsReport,
    ReconstructionTrace, RunOutput, RuntimeReport, StageSeconds, SweepPoint, SweepTimes, WindowTiming,
};
