//! Event windows of per-tick feature counts: the feature catalog, attack
//! signatures, the synthetic baseline/attack generator, window files and
//! descriptive statistics.

mod catalog;
mod generate;
mod io;
mod stats;
mod window;

pub use catalog::{
    AttackSignature, FeatureCatalog, FeatureDef, FeatureId, SignatureSet, TrafficConfig,
    FEATURE_COUNT,
};
pub use generate::{draw_count, generate_baseline, inject_attacks, inject_burst, InjectionParams};
pub use io::{load_window, sidecar_path, store_window, WindowFormat};
pub use stats::{window_stats, WindowStats};
pub use window::{
    CountMatrix, EventWindow, InjectionRecord, WindowKind, DEFAULT_SAMPLES, WINDOW_MINUTES,
};
