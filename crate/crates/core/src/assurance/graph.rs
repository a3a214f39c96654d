use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static factors of one directed link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeFactors {
    pub from: String,
    pub to: String,
    /// Information assurance `I`.
    pub assurance: f64,
    /// Link cost `C`.
    pub cost: f64,
    /// Encryption scale `E`.
    pub encryption: f64,
}

/// Most recent assessment seen for a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatestAssessment {
    pub window_id: String,
    pub timestamp: u64,
    pub assurance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<String>,
    edges: Vec<EdgeFactors>,
    paths: BTreeMap<String, Vec<String>>,
}

/// Vertices, factor-weighted directed edges and named simple paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct MultipathGraph {
    vertices: BTreeSet<String>,
    edges: BTreeMap<(String, String), EdgeFactors>,
    paths: BTreeMap<String, Vec<String>>,
    latest: BTreeMap<String, LatestAssessment>,
}

impl TryFrom<GraphDoc> for MultipathGraph {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        let mut g = MultipathGraph {
            vertices: BTreeSet::new(),
            edges: BTreeMap::new(),
            paths: BTreeMap::new(),
            latest: BTreeMap::new(),
        };
        for v in doc.vertices {
            if !g.vertices.insert(v.clone()) {
                return Err(Error::Schema(format!("duplicate vertex `{v}`")));
            }
        }
        for e in doc.edges {
            g.add_edge(e)?;
        }
        for (name, vs) in doc.paths {
            g.add_path(&name, vs)?;
        }
        Ok(g)
    }
}

impl From<MultipathGraph> for GraphDoc {
    fn from(g: MultipathGraph) -> Self {
        GraphDoc {
            vertices: g.vertices.into_iter().collect(),
            edges: g.edges.into_values().collect(),
            paths: g.paths,
        }
    }
}

impl MultipathGraph {
    pub fn new(vertices: impl IntoIterator<Item = impl Into<String>>) -> Self {
        MultipathGraph {
            vertices: vertices.into_iter().map(Into::into).collect(),
            edges: BTreeMap::new(),
            paths: BTreeMap::new(),
            latest: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn add_edge(&mut self, e: EdgeFactors) -> Result<()> {
        for v in [&e.from, &e.to] {
            if !self.vertices.contains(v) {
                return Err(Error::Schema(format!("edge endpoint `{v}` is not a vertex")));
            }
        }
        for (name, x) in [("assurance", e.assurance), ("cost", e.cost), ("encryption", e.encryption)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!("{} -> {}: {name} must be > 0", e.from, e.to)));
            }
        }
        self.edges.insert((e.from.clone(), e.to.clone()), e);
        Ok(())
    }

    pub fn add_path(&mut self, name: &str, vertices: Vec<String>) -> Result<()> {
        if vertices.len() < 2 {
            return Err(Error::Schema(format!("path `{name}` needs at least two vertices")));
        }
        let distinct: BTreeSet<&String> = vertices.iter().collect();
        if distinct.len() != vertices.len() {
            return Err(Error::Schema(format!("path `{name}` is not simple")));
        }
        for w in vertices.windows(2) {
            self.edge(&w[0], &w[1])?;
        }
        self.paths.insert(name.to_string(), vertices);
        Ok(())
    }

    pub fn edge(&self, from: &str, to: &str) -> Result<&EdgeFactors> {
        self.edges
            .get(&(from.to_string(), to.to_string()))
            .ok_or_else(|| Error::UnknownEdge(from.into(), to.into()))
    }

    pub fn path(&self, name: &str) -> Result<&[String]> {
        self.paths
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownPath(name.into()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &EdgeFactors> {
        self.edges.values()
    }

    pub fn path_names(&self) -> impl Iterator<Item = &str> {
        self.paths.keys().map(String::as_str)
    }

    /// Keep the newest assessment per path; older timestamps are ignored.
    pub fn record_assessment(&mut self, path: &str, latest: LatestAssessment) -> Result<bool> {
        self.path(path)?;
        match self.latest.get(path) {
            Some(cur) if cur.timestamp > latest.timestamp => Ok(false),
            _ => {
                self.latest.insert(path.to_string(), latest);
                Ok(true)
            }
        }
    }

    pub fn latest(&self, path: &str) -> Option<&LatestAssessment> {
        self.latest.get(path)
    }

    /// Configured `I` of the edge, lowered to the weakest latest assessment
    /// of any path that uses it.
    pub fn edge_assurance(&self, from: &str, to: &str) -> Result<f64> {
        let base = self.edge(from, to)?.assurance;
        let assessed = self
            .paths
            .iter()
            .filter(|(_, vs)| vs.windows(2).any(|w| w[0] == from && w[1] == to))
            .filter_map(|(p, _)| self.latest.get(p).map(|l| l.assurance))
            .fold(f64::INFINITY, f64::min);
        Ok(base.min(assessed))
    }

    /// Seven-vertex example with two four-hop paths sharing the first hop.
    pub fn example() -> Self {
        let mut g = MultipathGraph::new((1..=7).map(|i| format!("v{i}")));
        let hops = [
            ("v1", "v6"),
            ("v6", "v3"),
            ("v3", "v4"),
            ("v4", "v2"),
            ("v6", "v5"),
            ("v5", "v7"),
            ("v7", "v2"),
        ];
        for (a, b) in hops {
            g.add_edge(EdgeFactors {
                from: a.into(),
                to: b.into(),
                assurance: 1.0,
                cost: 1.0,
                encryption: 1.0,
            })
            .expect("valid edge");
        }
        let p = |vs: &[&str]| vs.iter().map(|s| s.to_string()).collect();
        g.add_path("P_i", p(&["v1", "v6", "v3", "v4", "v2"])).expect("valid path");
        g.add_path("P_j", p(&["v1", "v6", "v5", "v7", "v2"])).expect("valid path");
        g
    }
}

/// `T = L * sum over paths, sum over edges of I * C * E`.
pub fn path_throughput(graph: &MultipathGraph, paths: &[&str], message_len: f64) -> Result<f64> {
    if !(message_len > 0.0) {
        return Err(Error::InvalidParameter("message length must be > 0".into()));
    }
    let mut total = 0.0;
    for &name in paths {
        for w in graph.path(name)?.windows(2) {
            let e = graph.edge(&w[0], &w[1])?;
            total += graph.edge_assurance(&w[0], &w[1])? * e.cost * e.encryption;
        }
    }
    Ok(message_len * total)
}
