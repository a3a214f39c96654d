use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::catalog::{AttackSignature, FeatureCatalog, SignatureSet};
use super::window::{CountMatrix, EventWindow, InjectionRecord, WindowKind};
use crate::error::{Error, Result};

/// Draw one over-dispersed count with mean `mean` and `Var = mean + d*mean^2`
/// (gamma-mixed Poisson; plain Poisson when `d == 0`).
pub fn draw_count<R: Rng + ?Sized>(rng: &mut R, mean: f64, dispersion: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let lambda = if dispersion > 0.0 {
        let shape = 1.0 / dispersion;
        Gamma::new(shape, mean * dispersion)
            .expect("positive gamma parameters")
            .sample(rng)
    } else {
        mean
    };
    poisson(rng, lambda)
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(lambda).expect("finite lambda").sample(rng);
    x.min(u32::MAX as f64) as u32
}

/// Generate an attack-free window of `n` samples.
pub fn generate_baseline(catalog: &FeatureCatalog, n: usize, seed: u64) -> Result<EventWindow> {
    if n == 0 {
        return Err(Error::InvalidDimension("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = CountMatrix::zeros(n, catalog.len());
    for r in 0..n {
        for (c, def) in catalog.features().iter().enumerate() {
            counts.set(
                r,
                c,
                draw_count(&mut rng, def.baseline_rate, def.baseline_dispersion),
            );
        }
    }
    EventWindow::new(format!("baseline-{seed}"), WindowKind::Baseline, counts, vec![])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InjectionParams {
    /// Expected number of bursts per window.
    pub poisson_rate: f64,
    /// Rows covered by each burst.
    pub burst_len: usize,
    /// Multiplier applied to the baseline rate of the suite's features.
    pub intensity: f64,
}

impl Default for InjectionParams {
    fn default() -> Self {
        InjectionParams {
            poisson_rate: 1.0,
            burst_len: 64,
            intensity: 8.0,
        }
    }
}

/// Inject a Poisson-distributed number of attack bursts into a baseline window.
///
/// The first draw of the seeded stream is the burst count; each burst then
/// picks a suite uniformly and a uniform start row.
pub fn inject_attacks(
    window: &EventWindow,
    catalog: &FeatureCatalog,
    signatures: &SignatureSet,
    params: &InjectionParams,
    seed: u64,
) -> Result<EventWindow> {
    if window.kind != WindowKind::Baseline {
        return Err(Error::InvalidKind {
            expected: "baseline",
            found: window.kind.as_str(),
        });
    }
    if !(params.poisson_rate >= 0.0 && params.poisson_rate.is_finite()) {
        return Err(Error::InvalidParameter("poisson_rate must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = poisson(&mut rng, params.poisson_rate) as usize;
    let mut out = window.clone();
    let sigs: Vec<&AttackSignature> = signatures.iter().collect();
    for _ in 0..events {
        let sig = sigs[rng.random_range(0..sigs.len())];
        let len = params.burst_len.clamp(1, out.samples());
        let start = rng.random_range(0..=out.samples() - len);
        inject_burst(&mut out, catalog, sig, start, len, params.intensity, &mut rng)?;
    }
    Ok(out)
}

/// Elevate `signature`'s features over rows `start..start+len` so their mean
/// becomes `intensity` times the baseline rate, and record the label.
pub fn inject_burst<R: Rng + ?Sized>(
    window: &mut EventWindow,
    catalog: &FeatureCatalog,
    signature: &AttackSignature,
    start: usize,
    len: usize,
    intensity: f64,
    rng: &mut R,
) -> Result<()> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::InvalidParameter("intensity must be > 0".into()));
    }
    if len == 0 || start + len > window.samples() {
        return Err(Error::InvalidDimension(format!(
            "burst {start}+{len} outside window of {} rows",
            window.samples()
        )));
    }
    signature.validate(Some(catalog))?;
    for row in start..start + len {
        for f in &signature.features {
            let col = f.index();
            let base = window.counts.get(row, col);
            let rate = catalog.features()[col].baseline_rate;
            let value = if intensity >= 1.0 {
                base.saturating_add(poisson(rng, (intensity - 1.0) * rate))
            } else {
                // thin the existing count
                Binomial::new(base as u64, intensity)
                    .expect("valid binomial")
                    .sample(rng) as u32
            };
            window.counts.set(row, col, value);
        }
    }
    window.labels.push(InjectionRecord {
        suite: signature.suite,
        start,
        end: start + len - 1,
    });
    window.kind = WindowKind::Injected;
    Ok(())
}
