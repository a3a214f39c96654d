//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pathsec::anomaly::{
    compressed_covariance, eigenvalue_drift_bound, q_threshold_from, residual_projection, QForm, Spectrum,
};
use pathsec::assurance::{assurance_factor, threat_score};
use pathsec::cs::{
    build_sensing_matrix, compress, compress_matrix, orthogonal_matching_pursuit, SensingMatrix,
    RESIDUAL_TOLERANCE,
};
use pathsec::experiment::{run_experiment, ExperimentConfig, RunOutput};
use pathsec::signature::{entropy_bits, Dendrogram, MatchResult};
use pathsec::traffic::{generate_baseline, FeatureCatalog, SignatureSet};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct DeskRun {
    out: RunOutput,
    elapsed: Duration,
}

fn desk_run() -> DeskRun {
    let cfg = ExperimentConfig { threads: Some(1), ..ExperimentConfig::default() };
    assert_eq!((cfg.windows, cfg.samples, cfg.pipeline.beta), (200, 1024, 0.1));
    let t = Instant::now();
    let out = run_experiment(&cfg).expect("desk-scale run");
    DeskRun { out, elapsed: t.elapsed() }
}

fn criterion_1(run: &DeskRun) -> Outcome {
    let d = &run.out.report.detection;
    let rate = d.detection_rate.unwrap_or(0.0);
    let fp = d.false_pos_rate.unwrap_or(1.0);
    let secs = run.elapsed.as_secs_f64();
    check(
        rate >= 0.85 && fp <= 0.10 && secs <= 300.0 && run.out.report.failed_windows == 0,
        format!(
            "detected {}/{} instances ({rate:.4}), false-positive windows {}/{} ({fp:.4}), {secs:.1}s on one thread",
            d.detected, d.instances, d.false_pos_windows, d.unlabeled_windows
        ),
    )
}

fn criterion_2(run: &DeskRun) -> Outcome {
    let c = &run.out.report.classification;
    let level = c.levels.iter().find(|l| l.threshold == 0.75).ok_or("no 0.75 level")?;
    let acc = level.accuracy.unwrap_or(0.0);
    check(
        acc >= 0.85 && c.forwarded > 0,
        format!("{}/{} detected injected windows matched at >= 0.75 ({acc:.4})", level.classified, c.forwarded),
    )
}

fn criterion_3(run: &DeskRun) -> Outcome {
    let g = &run.out.report.gating;
    let d = &run.out.report.detection;
    let quiet = d.unlabeled_windows as f64 / run.out.report.windows as f64;
    let ratio = run.out.runtime.classify_ratio.ok_or("no ungated comparison")?;
    check(
        ratio <= 0.6 && (0.4..=0.6).contains(&quiet) && g.anomalous_mismatches == 0,
        format!(
            "classification time gated/ungated = {ratio:.3} with {:.0}% non-anomalous windows ({} vs {} classified)",
            100.0 * quiet,
            g.classified_gated,
            g.classified_ungated.unwrap_or(0)
        ),
    )
}

fn criterion_4(run: &DeskRun) -> Outcome {
    let sweep = &run.out.report.cs.sweep;
    let ratios: Vec<f64> = sweep.iter().map(|p| p.ratio).collect();
    if ratios != [0.1, 0.2, 0.3, 0.5] {
        return Err(format!("unexpected sweep ratios {ratios:?}"));
    }
    let means: Vec<f64> = sweep.iter().map(|p| p.mse_mean).collect();
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);

    let mut worst = 0.0f64;
    let mut cases = 0;
    for (n, m) in [(1024usize, 610usize), (512, 307), (256, 128)] {
        for k in [1usize, 2, 4, 8, 16] {
            assert!(m >= 2 * k);
            for seed in 0..10u64 {
                let u = build_sensing_matrix(n, m, seed).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let mut x = DVector::zeros(n);
                for i in sample(&mut rng, n, k) {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    x[i] = sign * rng.random_range(1.0..5.0);
                }
                let y = u.matrix() * &x;
                let r = orthogonal_matching_pursuit(u.matrix(), &y, k, RESIDUAL_TOLERANCE);
                worst = worst.max((&r.coefficients - &x).amax());
                cases += 1;
            }
        }
    }
    check(
        monotone && worst <= 1e-6,
        format!("seed-averaged MSE {means:.3?}; {cases} k-sparse recoveries, worst error {worst:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let catalog = FeatureCatalog::default();
    let n = 1024;
    let cov_of = |u: &SensingMatrix, seed: u64| {
        let w = generate_baseline(&catalog, n, seed).unwrap();
        compressed_covariance(&compress(u, &w).unwrap()).unwrap()
    };
    let identity = SensingMatrix::identity(n);

    // M = N: a full orthonormal DCT and a random orthogonal matrix
    let mut exact = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gauss = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let q = gauss.qr().q();
    let orthogonal = [
        build_sensing_matrix(n, n, 3).unwrap(),
        SensingMatrix::from_parts(q, (0..n).collect()).unwrap(),
    ];
    for (i, u) in orthogonal.iter().enumerate() {
        let original = Spectrum::from_covariance(&cov_of(&identity, 40 + i as u64), 0.9).unwrap();
        let compressed = Spectrum::from_covariance(&cov_of(u, 40 + i as u64), 0.9).unwrap();
        for (a, b) in original.eigenvalues.iter().zip(&compressed.eigenvalues).take(original.k.max(1)) {
            exact = exact.max((a - b).abs());
        }
    }

    // M / N = 0.3 against the drift bound over the whole spectrum
    let m = (0.3 * n as f64).round() as usize;
    let n_v = catalog.len();
    let mut within = 0;
    for seed in 0..50u64 {
        let u = build_sensing_matrix(n, m, seed).unwrap();
        let original = Spectrum::from_covariance(&cov_of(&identity, 100 + seed), 0.9).unwrap();
        let compressed = Spectrum::from_covariance(&cov_of(&u, 100 + seed), 0.9).unwrap();
        let drift = original
            .eigenvalues
            .iter()
            .zip(&compressed.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bound = eigenvalue_drift_bound(original.eigenvalues[0], n_v, m, 0.1).unwrap();
        within += usize::from(drift <= bound);
    }
    check(
        exact <= 1e-6 && within >= 45,
        format!("M = N top-k eigenvalue gap {exact:.2e}; M/N = 0.3 drift within bound in {within}/50 trials"),
    )
}

fn criterion_6() -> Outcome {
    let mut cases = 0;
    let mut nonzero = 0;
    for seed in 0..300u64 {
        let (got, want) = common::compare_case(seed);
        if got != want {
            return Err(format!("seed {seed}: got {got:?}, brute force {want:?}"));
        }
        cases += 1;
        nonzero += want.iter().filter(|t| t.1 > 0.0).count();
    }

    let sigs = SignatureSet::default();
    let hit = |cluster_id: usize, suite: u32, probability: f64| MatchResult {
        cluster_id,
        suite: Some(suite),
        probability,
        matched: 0,
        signature_size: 0,
        significant: vec![],
    };
    let hand = [
        (vec![hit(0, 2, 1.0)], 5.0, 0.2),
        (vec![hit(0, 2, 0.5)], 2.5, 0.4),
        (vec![hit(0, 1, 0.5), hit(1, 3, 0.25)], 2.5, 0.4),
    ];
    for (matches, o_f, i) in hand {
        let t = threat_score(Some("P_i"), &matches, &sigs).map_err(|e| e.to_string())?;
        let got = assurance_factor(t.score, 1.0);
        if (t.score - o_f).abs() > 1e-12 || (got - i).abs() > 1e-12 {
            return Err(format!("O_f {} (want {o_f}), I {got} (want {i})", t.score));
        }
    }
    check(
        nonzero > 50,
        format!("{cases} windows of <= 8 samples agree with brute force ({nonzero} nonzero matches); O_f 5 -> I 0.2, O_f 2.5 -> I 0.4"),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    // projector idempotence and Pythagoras
    let w = generate_baseline(&FeatureCatalog::default(), 256, 1).unwrap();
    let s = Spectrum::from_covariance(&compressed_covariance(&compress(&SensingMatrix::identity(256), &w).unwrap()).unwrap(), 0.9)
        .unwrap();
    let p = s.residual_projector();
    let idem = (&p * &p - &p).amax();
    let mut pyth = 0.0f64;
    for _ in 0..100 {
        let x = DVector::from_fn(s.dim(), |_, _| rng.random_range(-10.0..10.0));
        let r = residual_projection(&s.principal(), &x).unwrap();
        let kept = &x - &r;
        pyth = pyth.max((x.norm_squared() - r.norm_squared() - kept.norm_squared()).abs() / x.norm_squared());
    }
    if idem > 1e-9 || pyth > 1e-6 {
        failures.push(format!("projector idempotence {idem:.1e}, Pythagoras {pyth:.1e}"));
    }

    // dendrogram merge distances never decrease
    for seed in 0..20u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let pts = DMatrix::from_fn(30, 4, |_, _| r.random_range(0.0..1.0));
        let d = Dendrogram::build(&pts).unwrap();
        if d.merges.windows(2).any(|m| m[1].distance < m[0].distance) {
            failures.push(format!("non-monotone dendrogram at seed {seed}"));
        }
    }

    // entropy bounds over 19 features
    let max_h = 19f64.log2();
    for _ in 0..200 {
        let totals: Vec<f64> = (0..19).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..100.0) }).collect();
        if totals.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let h = entropy_bits(&totals).unwrap();
        if !(0.0..=max_h + 1e-12).contains(&h) {
            failures.push(format!("entropy {h} outside [0, log2 19]"));
        }
    }

    // match probabilities in [0, 1]
    for seed in 0..100u64 {
        let (got, _) = common::compare_case(5000 + seed);
        if got.iter().any(|t| !(0.0..=1.0).contains(&t.1)) {
            failures.push(format!("probability outside [0, 1] at seed {seed}"));
        }
    }

    // Q threshold scales with the residual spectrum
    let lam = [3.0, 2.0, 1.0, 0.5];
    let q1 = q_threshold_from(&lam, 0.1, QForm::Canonical).unwrap().q_beta;
    for scale in [2.0, 10.0, 0.5] {
        let scaled: Vec<f64> = lam.iter().map(|l| l * scale).collect();
        let q = q_threshold_from(&scaled, 0.1, QForm::Canonical).unwrap().q_beta;
        if (q - scale * q1).abs() > 1e-9 * q.abs() {
            failures.push(format!("Q not homogeneous at scale {scale}"));
        }
    }

    // compression is linear
    let u = build_sensing_matrix(128, 40, 9).unwrap();
    let a = DMatrix::from_fn(128, 19, |_, _| rng.random_range(0.0..50.0));
    let b = DMatrix::from_fn(128, 19, |_, _| rng.random_range(0.0..50.0));
    let lhs = compress_matrix(&u, &(&a * 2.5 - &b * 0.75), "l").unwrap().y;
    let rhs = compress_matrix(&u, &a, "a").unwrap().y * 2.5 - compress_matrix(&u, &b, "b").unwrap().y * 0.75;
    let lin = (&lhs - &rhs).amax() / lhs.amax();
    if lin > 1e-6 {
        failures.push(format!("compression not linear: {lin:.1e}"));
    }

    // byte-identical reports from identical configs
    let report = |dir: &std::path::Path| {
        let cfg = ExperimentConfig {
            windows: 12,
            samples: 256,
            seed: 11,
            cs_trials: 2,
            output_dir: Some(dir.to_path_buf()),
            ..Default::default()
        };
        run_experiment(&cfg).unwrap();
        std::fs::read(dir.join("report.json")).unwrap()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    if report(d1.path()) != report(d2.path()) {
        failures.push("reports differ for identical configs".into());
    }

    if failures.is_empty() {
        Ok("projector, dendrogram, entropy, probability, Q homogeneity, linearity and report invariants hold".into())
    } else {
        Err(failures.join("; "))
    }
}

fn main() {
    let run = desk_run();
    let results = [
        criterion_1(&run),
        criterion_2(&run),
        criterion_3(&run),
        criterion_4(&run),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let mut failed = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {}: PASS ({detail})", i + 1),
            Err(detail) => {
                println!("criterion {}: FAIL ({detail})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
