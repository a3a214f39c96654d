use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::entropy::{baseline_entropy, column_medians, conditional_entropy_within};
use super::linkage::{agglomerate, max_pairwise_distance, Agglomeration};
use crate::error::{Error, Result};
use crate::traffic::{CountMatrix, EventWindow, FeatureId, SignatureSet};

/// Per-feature statistics of a clean reference window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// `H(F)` in bits.
    pub entropy: f64,
    pub samples: usize,
}

impl BaselineProfile {
    pub fn from_counts(counts: &CountMatrix) -> Result<Self> {
        let n = counts.nrows();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: n });
        }
        let mut mean = Vec::with_capacity(counts.ncols());
        let mut std_dev = Vec::with_capacity(counts.ncols());
        for j in 0..counts.ncols() {
            let m = counts.column(j).map(f64::from).sum::<f64>() / n as f64;
            let v = counts.column(j).map(|c| (c as f64 - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            mean.push(m);
            std_dev.push(v.sqrt());
        }
        Ok(BaselineProfile {
            mean,
            std_dev,
            entropy: baseline_entropy(counts)?,
            samples: n,
        })
    }

    pub fn from_window(window: &EventWindow) -> Result<Self> {
        Self::from_counts(&window.counts)
    }

    pub fn feature_count(&self) -> usize {
        self.mean.len()
    }

    /// Rows of the window divided by the baseline mean (1 where the mean is 0).
    pub fn normalize(&self, counts: &CountMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(counts.nrows(), counts.ncols(), |i, j| {
            let m = self.mean[j];
            counts.get(i, j) as f64 / if m > 0.0 { m } else { 1.0 }
        })
    }
}

/// One cluster of the cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Dendrogram node id.
    pub id: usize,
    pub members: Vec<usize>,
    pub cophenetic: f64,
    pub inconsistency: f64,
    pub active_features: Vec<FeatureId>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Features whose mean over `members` clears the baseline by two standard
/// errors.
pub fn active_features(counts: &CountMatrix, members: &[usize], baseline: &BaselineProfile) -> Vec<FeatureId> {
    if members.is_empty() {
        return Vec::new();
    }
    let n = members.len() as f64;
    (0..counts.ncols())
        .filter(|&j| {
            let m = members.iter().map(|&r| counts.get(r, j) as f64).sum::<f64>() / n;
            let b = baseline.mean[j];
            m > b && m >= b + 2.0 * baseline.std_dev[j] / n.sqrt()
        })
        .map(FeatureId::from_index)
        .collect()
}

/// Clusters from an agglomeration with their tree statistics.
pub fn clusters_from(agg: &Agglomeration, counts: &CountMatrix, baseline: &BaselineProfile) -> Vec<Cluster> {
    agg.roots
        .iter()
        .map(|&id| {
            let members = agg.dendrogram.members(id);
            Cluster {
                id,
                active_features: active_features(counts, &members, baseline),
                cophenetic: agg.dendrogram.cophenetic(id),
                inconsistency: agg.dendrogram.inconsistency(id),
                members,
            }
        })
        .collect()
}

/// Clusters with at least one active feature and more than
/// `min_freq_fraction * samples` members, largest cophenetic distance first,
/// then highest inconsistency.
pub fn valid_clusters(clusters: &[Cluster], samples: usize, min_freq_fraction: f64) -> Vec<Cluster> {
    let floor = min_freq_fraction * samples as f64;
    let mut out: Vec<Cluster> = clusters
        .iter()
        .filter(|c| !c.active_features.is_empty() && c.size() as f64 > floor)
        .cloned()
        .collect();
    out.sort_by(|a, b| {
        b.cophenetic
            .total_cmp(&a.cophenetic)
            .then(b.inconsistency.total_cmp(&a.inconsistency))
            .then(a.id.cmp(&b.id))
    });
    out
}

/// Active features of the cluster whose conditional entropy over the
/// cluster rows exceeds `baseline_h`.
pub fn significant_features(
    cluster: &Cluster,
    counts: &CountMatrix,
    medians: &[f64],
    baseline_h: f64,
) -> Vec<FeatureId> {
    cluster
        .active_features
        .iter()
        .copied()
        .filter(|&f| {
            conditional_entropy_within(counts, &cluster.members, f, medians[f.index()])
                .is_ok_and(|h| h > baseline_h)
        })
        .collect()
}

/// Where `H(F)` comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropySource {
    #[default]
    Baseline,
    Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Merge threshold; `None` uses half the largest pairwise distance.
    pub delta: Option<f64>,
    pub max_clusters: Option<usize>,
    pub min_freq_fraction: f64,
    pub entropy_source: EntropySource,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            delta: None,
            max_clusters: None,
            min_freq_fraction: 0.02,
            entropy_source: EntropySource::Baseline,
        }
    }
}

/// Best signature for one candidate cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub cluster_id: usize,
    pub suite: Option<u32>,
    pub probability: f64,
    /// `N_i`: significant features shared with the chosen signature.
    pub matched: usize,
    /// `N_k`: size of the chosen signature.
    pub signature_size: usize,
    pub significant: Vec<FeatureId>,
}

/// `(C, SSig, PProb)` plus the per-cluster detail.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchTriple {
    pub clusters: Vec<Cluster>,
    pub signatures: Vec<Option<u32>>,
    pub probabilities: Vec<f64>,
    pub matches: Vec<MatchResult>,
    pub delta: f64,
    pub cut_size: usize,
}

impl MatchTriple {
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Highest probability reached for `suite`, 0 if never matched.
    pub fn best_for(&self, suite: u32) -> f64 {
        self.matches
            .iter()
            .filter(|m| m.suite == Some(suite))
            .map(|m| m.probability)
            .fold(0.0, f64::max)
    }
}

/// `N_i / N_k` against every signature; argmax with ties to the lower suite.
pub fn best_signature(significant: &[FeatureId], signatures: &SignatureSet) -> (Option<u32>, f64, usize, usize) {
    let sig: BTreeSet<FeatureId> = significant.iter().copied().collect();
    let mut best = (None, 0.0, 0, 0);
    for s in signatures.iter() {
        let nk = s.features.len();
        if nk == 0 {
            continue;
        }
        let ni = s.features.intersection(&sig).count();
        let p = ni as f64 / nk as f64;
        if p > best.1 {
            best = (Some(s.suite), p, ni, nk);
        }
    }
    best
}

/// Cluster the window, keep valid clusters and match each against the
/// signature set.
pub fn signature_match_prob(
    signatures: &SignatureSet,
    counts: &CountMatrix,
    baseline: &BaselineProfile,
    params: &MatchParams,
) -> Result<MatchTriple> {
    if signatures.is_empty() {
        return Err(Error::InvalidParameter("signature set is empty".into()));
    }
    if counts.ncols() != baseline.feature_count() {
        return Err(Error::ShapeMismatch {
            op: "signature_match_prob",
            left: (baseline.samples, baseline.feature_count()),
            right: (counts.nrows(), counts.ncols()),
        });
    }
    let points = baseline.normalize(counts);
    let delta = params.delta.unwrap_or_else(|| 0.5 * max_pairwise_distance(&points));
    let agg = agglomerate(&points, delta, params.max_clusters)?;
    let all = clusters_from(&agg, counts, baseline);
    let candidates = valid_clusters(&all, counts.nrows(), params.min_freq_fraction);
    let h_ref = match params.entropy_source {
        EntropySource::Baseline => baseline.entropy,
        EntropySource::Window => baseline_entropy(counts)?,
    };
    let medians = column_medians(counts);
    let matches: Vec<MatchResult> = candidates
        .iter()
        .map(|c| {
            let significant = significant_features(c, counts, &medians, h_ref);
            let (suite, probability, matched, signature_size) = best_signature(&significant, signatures);
            MatchResult {
                cluster_id: c.id,
                suite,
                probability,
                matched,
                signature_size,
                significant,
            }
        })
        .collect();
    Ok(MatchTriple {
        signatures: matches.iter().map(|m| m.suite).collect(),
        probabilities: matches.iter().map(|m| m.probability).collect(),
        clusters: candidates,
        matches,
        delta,
        cut_size: agg.roots.len(),
    })
}
