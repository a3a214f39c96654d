use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of traffic features tracked per sample moment.
pub const FEATURE_COUNT: usize = 19;

/// A traffic feature identifier, `f1` through `f19`.
///
/// Stored 1-based to match how features are named in reports; use
/// [`FeatureId::index`] for the zero-based column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(u16);

impl FeatureId {
    pub fn new(number: u16) -> Result<Self> {
        if number == 0 {
            return Err(Error::InvalidParameter("feature ids start at f1".into()));
        }
        Ok(FeatureId(number))
    }

    pub fn from_index(index: usize) -> Self {
        FeatureId(index as u16 + 1)
    }

    pub fn number(self) -> u16 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('f')
            .ok_or_else(|| Error::InvalidParameter(format!("bad feature id `{s}`")))?;
        let n: u16 = digits
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad feature id `{s}`")))?;
        FeatureId::new(n)
    }
}

impl Serialize for FeatureId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub id: FeatureId,
    pub indicator: String,
    /// Mean count per sample tick.
    pub baseline_rate: f64,
    /// Over-dispersion `d` in `Var = mu + d * mu^2`; zero gives Poisson counts.
    #[serde(default)]
    pub baseline_dispersion: f64,
}

/// The ordered feature set; column `j` of every window is `features[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDef>", into = "Vec<FeatureDef>")]
pub struct FeatureCatalog {
    features: Vec<FeatureDef>,
}

impl FeatureCatalog {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        if features.len() != FEATURE_COUNT {
            return Err(Error::Schema(format!(
                "catalog must define {FEATURE_COUNT} features, got {}",
                features.len()
            )));
        }
        for (j, def) in features.iter().enumerate() {
            if def.id != FeatureId::from_index(j) {
                return Err(Error::Schema(format!(
                    "catalog entry {j} is {}, expected {}",
                    def.id,
                    FeatureId::from_index(j)
                )));
            }
            if !(def.baseline_rate >= 0.0 && def.baseline_rate.is_finite()) {
                return Err(Error::Schema(format!("{}: baseline_rate must be >= 0", def.id)));
            }
            if !(def.baseline_dispersion >= 0.0 && def.baseline_dispersion.is_finite()) {
                return Err(Error::Schema(format!(
                    "{}: baseline_dispersion must be >= 0",
                    def.id
                )));
            }
        }
        Ok(FeatureCatalog { features })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        id.index() < self.features.len()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.baseline_rate).collect()
    }

    /// Returns a copy with every baseline rate replaced by `f(index, rate)`.
    pub fn map_rates(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(j, def)| FeatureDef {
                baseline_rate: f(j, def.baseline_rate),
                ..def.clone()
            })
            .collect();
        FeatureCatalog::new(features)
    }
}

impl TryFrom<Vec<FeatureDef>> for FeatureCatalog {
    type Error = Error;

    fn try_from(features: Vec<FeatureDef>) -> Result<Self> {
        FeatureCatalog::new(features)
    }
}

impl From<FeatureCatalog> for Vec<FeatureDef> {
    fn from(c: FeatureCatalog) -> Self {
        c.features
    }
}

impl Default for FeatureCatalog {
    /// f1 to f12 are the low-volume, attack-related counters. f13 to f19 are
    /// high-volume background protocol traffic, which dominates the baseline
    /// feature distribution.
    fn default() -> Self {
        const DEFAULTS: [(&str, f64, f64); FEATURE_COUNT] = [
            ("ICMP Redirect", 6.0, 0.15),
            ("TCP http [RST]", 8.0, 0.15),
            ("TCP http [SYN, ACK]", 10.0, 0.15),
            ("ICMP Destination Unreachable", 6.0, 0.15),
            ("OSPF LS Update", 6.0, 0.15),
            ("TCP bgp [RST, ACK]", 5.0, 0.15),
            ("TCP ospf-lite [RST, ACK]", 5.0, 0.15),
            ("TCP bgp [SYN]", 6.0, 0.15),
            ("TCP https [RST, ACK]", 8.0, 0.15),
            ("TCP https [SYN]", 6.0, 0.15),
            ("TCP ssh [RST, ACK]", 5.0, 0.15),
            ("TCP telnet [RST, ACK]", 5.0, 0.15),
            ("TCP http [ACK]", 100.0, 0.01),
            ("TCP https [ACK]", 80.0, 0.01),
            ("ICMP Echo Request", 40.0, 0.02),
            ("ICMP Echo Reply", 40.0, 0.02),
            ("OSPF Hello", 25.0, 0.01),
            ("BGP KEEPALIVE", 20.0, 0.01),
            ("TCP ssh [ACK]", 30.0, 0.02),
        ];
        let features = DEFAULTS
            .iter()
            .enumerate()
            .map(|(j, &(indicator, rate, dispersion))| FeatureDef {
                id: FeatureId::from_index(j),
                indicator: indicator.to_string(),
                baseline_rate: rate,
                baseline_dispersion: dispersion,
            })
            .collect();
        FeatureCatalog { features }
    }
}

/// An attack suite's characteristic feature set and threat level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSignature {
    pub suite: u32,
    pub features: BTreeSet<FeatureId>,
    /// Severity from 1 (least) to 5 (most).
    pub threat_level: u8,
    #[serde(default)]
    pub description: String,
}

impl AttackSignature {
    pub fn new(
        suite: u32,
        features: impl IntoIterator<Item = u16>,
        threat_level: u8,
        description: impl Into<String>,
    ) -> Result<Self> {
        let features = features
            .into_iter()
            .map(FeatureId::new)
            .collect::<Result<BTreeSet<_>>>()?;
        let sig = AttackSignature {
            suite,
            features,
            threat_level,
            description: description.into(),
        };
        sig.validate(None)?;
        Ok(sig)
    }

    pub fn validate(&self, catalog: Option<&FeatureCatalog>) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema(format!("suite {}: empty feature set", self.suite)));
        }
        if !(1..=5).contains(&self.threat_level) {
            return Err(Error::Schema(format!(
                "suite {}: threat level {} outside 1..=5",
                self.suite, self.threat_level
            )));
        }
        if let Some(catalog) = catalog {
            if let Some(f) = self.features.iter().find(|f| !catalog.contains(**f)) {
                return Err(Error::Schema(format!(
                    "suite {}: feature {f} not in catalog",
                    self.suite
                )));
            }
        }
        Ok(())
    }
}

/// Signatures keyed by suite id, iterated in ascending suite order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<AttackSignature>", into = "Vec<AttackSignature>")]
pub struct SignatureSet {
    signatures: Vec<AttackSignature>,
}

impl SignatureSet {
    pub fn new(mut signatures: Vec<AttackSignature>) -> Result<Self> {
        if signatures.is_empty() {
            return Err(Error::Schema("signature set is empty".into()));
        }
        signatures.sort_by_key(|s| s.suite);
        for pair in signatures.windows(2) {
            if pair[0].suite == pair[1].suite {
                return Err(Error::Schema(format!("duplicate suite {}", pair[0].suite)));
            }
        }
        for s in &signatures {
            s.validate(None)?;
        }
        Ok(SignatureSet { signatures })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AttackSignature> {
        self.signatures.iter()
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn get(&self, suite: u32) -> Option<&AttackSignature> {
        self.signatures.iter().find(|s| s.suite == suite)
    }

    /// Number of distinct features across all signatures.
    pub fn active_feature_count(&self) -> usize {
        self.signatures
            .iter()
            .flat_map(|s| s.features.iter().copied())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn validate_against(&self, catalog: &FeatureCatalog) -> Result<()> {
        self.signatures
            .iter()
            .try_for_each(|s| s.validate(Some(catalog)))
    }

    /// Replace threat levels, e.g. to model a different threat catalog.
    pub fn with_threat_levels(&self, levels: &[(u32, u8)]) -> Result<Self> {
        let mut out = self.clone();
        for &(suite, level) in levels {
            let sig = out
                .signatures
                .iter_mut()
                .find(|s| s.suite == suite)
                .ok_or(Error::UnknownSignature(suite))?;
            sig.threat_level = level;
            sig.validate(None)?;
        }
        Ok(out)
    }
}

impl TryFrom<Vec<AttackSignature>> for SignatureSet {
    type Error = Error;

    fn try_from(v: Vec<AttackSignature>) -> Result<Self> {
        SignatureSet::new(v)
    }
}

impl From<SignatureSet> for Vec<AttackSignature> {
    fn from(s: SignatureSet) -> Self {
        s.signatures
    }
}

impl<'a> IntoIterator for &'a SignatureSet {
    type Item = &'a AttackSignature;
    type IntoIter = std::slice::Iter<'a, AttackSignature>;

    fn into_iter(self) -> Self::IntoIter {
        self.signatures.iter()
    }
}

impl Default for SignatureSet {
    /// The three cloud attack suites.
    fn default() -> Self {
        let sigs = vec![
            AttackSignature::new(
                1,
                [1, 2, 3, 4, 9, 11],
                3,
                "Cloud Guest Reconnaissance, Vulnerabilities & Exploitation",
            ),
            AttackSignature::new(
                2,
                [1, 5, 6, 7, 8, 9],
                5,
                "Cloud Infrastructure Reconnaissance, Vulnerabilities & Exploitation",
            ),
            AttackSignature::new(
                3,
                [1, 5, 8, 9, 10],
                4,
                "Cloud Services Reconnaissance, Vulnerabilities & Exploitation",
            ),
        ];
        SignatureSet::new(sigs.into_iter().map(|s| s.unwrap()).collect()).unwrap()
    }
}

/// Catalog and signatures as stored together in one JSON config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub catalog: FeatureCatalog,
    pub signatures: SignatureSet,
}

impl TrafficConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrafficConfig = serde_json::from_str(text)?;
        cfg.signatures.validate_against(&cfg.catalog)?;
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
}
