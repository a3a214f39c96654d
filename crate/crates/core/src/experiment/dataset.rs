use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::traffic::{generate_baseline, inject_burst, AttackSignature, EventWindow, TrafficConfig};

/// Independent stream seed for item `index` under `tag`.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_WINDOW: u64 = 1;
const TAG_INJECT: u64 = 2;
const TAG_REFERENCE: u64 = 3;
pub(crate) const TAG_SWEEP: u64 = 4;

/// Clean window the detector and baseline profile are fitted on.
pub fn reference_window(cfg: &ExperimentConfig, traffic: &TrafficConfig) -> Result<EventWindow> {
    Ok(generate_baseline(&traffic.catalog, cfg.samples, derive_seed(cfg.seed, TAG_REFERENCE, 0))?
        .with_id("reference"))
}

/// Window `index` of the dataset: a baseline draw, attacked with
/// probability `attack_fraction` by at least one burst.
pub fn dataset_window(cfg: &ExperimentConfig, traffic: &TrafficConfig, index: usize) -> Result<EventWindow> {
    let mut w = generate_baseline(&traffic.catalog, cfg.samples, derive_seed(cfg.seed, TAG_WINDOW, index as u64))?
        .with_id(format!("w{index:05}"));
    if !cfg.paths.is_empty() {
        w = w.with_path(cfg.paths[index % cfg.paths.len()].clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TAG_INJECT, index as u64));
    if rng.random_bool(cfg.attack_fraction) {
        let rate = cfg.injection.poisson_rate;
        let bursts = if rate > 0.0 {
            let k: f64 = Poisson::new(rate).expect("positive rate").sample(&mut rng);
            (k as usize).max(1)
        } else {
            1
        };
        let sigs: Vec<&AttackSignature> = traffic.signatures.iter().collect();
        let len = cfg.injection.burst_len.min(cfg.samples);
        for _ in 0..bursts {
            let sig = sigs[rng.random_range(0..sigs.len())];
            let start = rng.random_range(0..=cfg.samples - len);
            inject_burst(&mut w, &traffic.catalog, sig, start, len, cfg.injection.intensity, &mut rng)?;
        }
    }
    Ok(w)
}

/// All dataset windows in id order.
pub fn generate_dataset(cfg: &ExperimentConfig, traffic: &TrafficConfig) -> Result<Vec<EventWindow>> {
    (0..cfg.windows)
        .into_par_iter()
        .map(|i| dataset_window(cfg, traffic, i))
        .collect()
}
