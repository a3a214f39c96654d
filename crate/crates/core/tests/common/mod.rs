//! Random small windows and a brute-force restatement of signature matching.

#![allow(dead_code)]

use pathsec::signature::{signature_match_prob, BaselineProfile, MatchParams};
use pathsec::traffic::{AttackSignature, CountMatrix, SignatureSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FEATURES: usize = 5;

pub fn random_counts(rng: &mut ChaCha8Rng, rows: usize, hot: f64) -> CountMatrix {
    let data = (0..rows)
        .map(|_| {
            (0..FEATURES)
                .map(|j| {
                    // one dominant background feature keeps H(F) low
                    let base = if j == 0 { rng.random_range(30..40u32) } else { rng.random_range(0..3u32) };
                    if rng.random_bool(hot) { base + rng.random_range(5..30u32) } else { base }
                })
                .collect()
        })
        .collect();
    CountMatrix::from_rows(data).unwrap()
}

pub fn random_signatures(rng: &mut ChaCha8Rng) -> SignatureSet {
    let count = rng.random_range(1..=3u32);
    let sigs = (1..=count)
        .map(|suite| {
            let mut feats: Vec<u16> = (1..=FEATURES as u16).filter(|_| rng.random_bool(0.5)).collect();
            if feats.is_empty() {
                feats.push(rng.random_range(1..=FEATURES as u16));
            }
            AttackSignature::new(suite, feats, 1, "s").unwrap()
        })
        .collect();
    SignatureSet::new(sigs).unwrap()
}

/// Members, best probability and best suite of one valid cluster.
pub type Outcome = (Vec<usize>, f64, Option<u32>);

/// Direct restatement of the matching procedure without shared code.
pub fn oracle(sigs: &SignatureSet, w: &CountMatrix, base: &BaselineProfile) -> Vec<Outcome> {
    let n = w.nrows();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..FEATURES)
                .map(|j| w.get(i, j) as f64 / if base.mean[j] > 0.0 { base.mean[j] } else { 1.0 })
                .collect()
        })
        .collect();
    let d = |a: usize, b: usize| -> f64 {
        x[a].iter().zip(&x[b]).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let mut maxd = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            maxd = maxd.max(d(a, b));
        }
    }
    let delta = 0.5 * maxd;

    // naive complete linkage with scipy-style node ids
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut next = n;
    loop {
        if clusters.len() < 2 {
            break;
        }
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for p in 0..clusters.len() {
            for q in p + 1..clusters.len() {
                let mut link = 0.0f64;
                for &a in &clusters[p].1 {
                    for &b in &clusters[q].1 {
                        link = link.max(d(a, b));
                    }
                }
                let (lo, hi) = {
                    let (i, j) = (clusters[p].0, clusters[q].0);
                    (i.min(j), i.max(j))
                };
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, ..)) => link < bd || (link == bd && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((link, lo, hi, p, q));
                }
            }
        }
        let (link, _, _, p, q) = best.unwrap();
        if link > delta {
            break;
        }
        let merged: Vec<usize> = clusters[p].1.iter().chain(&clusters[q].1).copied().collect();
        clusters.remove(q);
        clusters.remove(p);
        clusters.push((next, merged));
        next += 1;
    }

    let median = |j: usize| -> f64 {
        let mut v: Vec<u32> = (0..n).map(|i| w.get(i, j)).collect();
        v.sort();
        if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 }
    };
    let mut out = Vec::new();
    for (_, mut members) in clusters {
        members.sort();
        let size = members.len() as f64;
        let active: Vec<usize> = (0..FEATURES)
            .filter(|&j| {
                let m = members.iter().map(|&r| w.get(r, j) as f64).sum::<f64>() / size;
                m > base.mean[j] && m >= base.mean[j] + 2.0 * base.std_dev[j] / size.sqrt()
            })
            .collect();
        if active.is_empty() || size <= 0.02 * n as f64 {
            continue;
        }
        let significant: Vec<u16> = active
            .iter()
            .copied()
            .filter(|&k| {
                let med = median(k);
                let mut tot = [0.0f64; FEATURES];
                let mut any = false;
                for &r in &members {
                    if w.get(r, k) as f64 > med {
                        any = true;
                        for (j, t) in tot.iter_mut().enumerate() {
                            *t += w.get(r, j) as f64;
                        }
                    }
                }
                let s: f64 = tot.iter().sum();
                if !any || s == 0.0 {
                    return false;
                }
                let h: f64 = tot.iter().filter(|&&t| t > 0.0).map(|&t| -(t / s) * (t / s).log2()).sum();
                h > base.entropy
            })
            .map(|k| k as u16 + 1)
            .collect();
        let mut best = (0.0, None);
        for s in sigs.iter() {
            let ni = s.features.iter().filter(|f| significant.contains(&f.number())).count();
            let p = ni as f64 / s.features.len() as f64;
            if p > best.0 {
                best = (p, Some(s.suite));
            }
        }
        out.push((members, best.0, best.1));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Run matching on a random case and return `(got, want)` sorted by members.
pub fn compare_case(seed: u64) -> (Vec<Outcome>, Vec<Outcome>) {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.random_range(2..=8);
    let base = BaselineProfile::from_counts(&random_counts(&mut rng, 8, 0.0)).unwrap();
    let w = random_counts(&mut rng, rows, 0.3);
    let sigs = random_signatures(&mut rng);
    let got = signature_match_prob(&sigs, &w, &base, &MatchParams::default()).unwrap();
    let mut got: Vec<Outcome> = got
        .clusters
        .iter()
        .zip(&got.matches)
        .map(|(c, m)| (c.members.clone(), m.probability, m.suite))
        .collect();
    got.sort_by(|a, b| a.0.cmp(&b.0));
    (got, oracle(&sigs, &w, &base))
}
