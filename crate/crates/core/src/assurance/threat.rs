use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::MatchResult;
use crate::traffic::SignatureSet;

/// Assurance reported when no threat was observed.
pub const DEFAULT_I_MAX: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreatContribution {
    pub cluster_id: usize,
    pub suite: u32,
    pub weight: f64,
    pub probability: f64,
}

/// `O_f = sum W_i * Prob(S_i)` for one path.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathThreat {
    pub path_id: Option<String>,
    pub contributions: Vec<ThreatContribution>,
    pub score: f64,
}

impl PathThreat {
    pub fn assurance(&self, i_max: f64) -> f64 {
        assurance_factor(self.score, i_max)
    }
}

/// Weight each matched cluster by its suite's threat level. Clusters without
/// a selected signature contribute nothing.
pub fn threat_score(path_id: Option<&str>, matches: &[MatchResult], signatures: &SignatureSet) -> Result<PathThreat> {
    let mut contributions = Vec::new();
    for m in matches {
        let Some(suite) = m.suite else { continue };
        let sig = signatures.get(suite).ok_or(Error::UnknownSignature(suite))?;
        contributions.push(ThreatContribution {
            cluster_id: m.cluster_id,
            suite,
            weight: sig.threat_level as f64,
            probability: m.probability,
        });
    }
    let score = contributions.iter().map(|c| c.weight * c.probability).sum();
    Ok(PathThreat {
        path_id: path_id.map(str::to_string),
        contributions,
        score,
    })
}

/// `I = 1 / O_f`, or `i_max` when `O_f` is zero.
pub fn assurance_factor(o_f: f64, i_max: f64) -> f64 {
    if o_f > 0.0 {
        1.0 / o_f
    } else {
        i_max
    }
}
