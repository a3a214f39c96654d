use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sq_dist(points: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    points
        .row(a)
        .iter()
        .zip(points.row(b).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Complete-linkage distance: the largest Euclidean distance between a
/// member of `a` and a member of `b`. Rows of `points` are samples.
pub fn linkage_distance(a: &[usize], b: &[usize], points: &DMatrix<f64>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("clusters must be nonempty".into()));
    }
    if let Some(&i) = a.iter().find(|i| b.contains(i)) {
        return Err(Error::ClusterOverlap(i));
    }
    let n = points.nrows();
    if let Some(&i) = a.iter().chain(b).find(|&&i| i >= n) {
        return Err(Error::InvalidDimension(format!("sample {i} out of range for {n} samples")));
    }
    let mut best = 0.0f64;
    for &i in a {
        for &j in b {
            best = best.max(sq_dist(points, i, j));
        }
    }
    Ok(best.sqrt())
}

/// One agglomeration step. Leaves are `0..n`; step `s` creates node `n + s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub id: usize,
    pub size: usize,
}

/// Full complete-linkage merge tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

/// Condensed symmetric distance matrix.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn new(points: &DMatrix<f64>) -> Self {
        let n = points.nrows();
        let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(sq_dist(points, i, j).sqrt());
            }
        }
        Condensed { n, d }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }

    fn max(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// Largest pairwise Euclidean distance between samples.
pub fn max_pairwise_distance(points: &DMatrix<f64>) -> f64 {
    Condensed::new(points).max()
}

impl Dendrogram {
    /// Build the full tree. Ties go to the lowest `(left, right)` node id
    /// pair.
    pub fn build(points: &DMatrix<f64>) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("clustering samples"));
        }
        Ok(Self::from_condensed(Condensed::new(points)))
    }

    fn from_condensed(mut dist: Condensed) -> Self {
        let n = dist.n;
        // slot s holds the cluster whose node id is node[s]
        let mut node: Vec<usize> = (0..n).collect();
        let mut size = vec![1usize; n];
        let mut active = vec![true; n];
        let mut nn = vec![usize::MAX; n];
        let mut nn_d = vec![f64::INFINITY; n];

        let refresh = |s: usize, dist: &Condensed, active: &[bool], node: &[usize]| {
            let mut best = (f64::INFINITY, usize::MAX);
            for t in 0..n {
                if t == s || !active[t] {
                    continue;
                }
                let d = dist.get(s, t);
                if best.1 == usize::MAX || d < best.0 || (d == best.0 && node[t] < node[best.1]) {
                    best = (d, t);
                }
            }
            best
        };
        for s in 0..n {
            let (d, t) = refresh(s, &dist, &active, &node);
            nn_d[s] = d;
            nn[s] = t;
        }

        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        for step in 0..n.saturating_sub(1) {
            // global minimum, ties on the ordered node id pair
            let mut pick: Option<(f64, usize, usize, usize)> = None;
            for s in (0..n).filter(|&s| active[s]) {
                let t = nn[s];
                let (lo, hi) = if node[s] < node[t] { (node[s], node[t]) } else { (node[t], node[s]) };
                let better = match pick {
                    None => true,
                    Some((d, plo, phi, _)) => nn_d[s] < d || (nn_d[s] == d && (lo, hi) < (plo, phi)),
                };
                if better {
                    pick = Some((nn_d[s], lo, hi, s));
                }
            }
            let (d, lo, hi, s) = pick.expect("two active clusters");
            let t = nn[s];
            let (keep, gone) = (s.min(t), s.max(t));
            active[gone] = false;
            for k in (0..n).filter(|&k| active[k] && k != keep) {
                let v = dist.get(keep, k).max(dist.get(gone, k));
                dist.set(keep, k, v);
            }
            size[keep] += size[gone];
            node[keep] = n + step;
            merges.push(Merge {
                left: lo,
                right: hi,
                distance: d,
                id: n + step,
                size: size[keep],
            });
            // complete-linkage distances only grow and the new node has the
            // highest id, so only rows pointing at the merged slots change
            for k in (0..n).filter(|&k| active[k]) {
                if k == keep || nn[k] == keep || nn[k] == gone {
                    let (dd, tt) = refresh(k, &dist, &active, &node);
                    nn_d[k] = dd;
                    nn[k] = tt;
                }
            }
        }
        Dendrogram { leaves: n, merges }
    }

    pub fn total_nodes(&self) -> usize {
        self.leaves + self.merges.len()
    }

    fn merge_of(&self, id: usize) -> Option<&Merge> {
        id.checked_sub(self.leaves).and_then(|s| self.merges.get(s))
    }

    /// Leaves under node `id`, ascending.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            match self.merge_of(x) {
                Some(m) => {
                    stack.push(m.left);
                    stack.push(m.right);
                }
                None => out.push(x),
            }
        }
        out.sort_unstable();
        out
    }

    /// Height of the node's top merge; 0 for a leaf.
    pub fn cophenetic(&self, id: usize) -> f64 {
        self.merge_of(id).map_or(0.0, |m| m.distance)
    }

    /// Inconsistency coefficient of the node's top merge, over the merge
    /// and its non-leaf children: `(h - mean) / std` with the sample std,
    /// and 0 when the std vanishes.
    pub fn inconsistency(&self, id: usize) -> f64 {
        let Some(m) = self.merge_of(id) else {
            return 0.0;
        };
        let mut hs = vec![m.distance];
        for c in [m.left, m.right] {
            if let Some(cm) = self.merge_of(c) {
                hs.push(cm.distance);
            }
        }
        if hs.len() < 2 {
            return 0.0;
        }
        let mean = hs.iter().sum::<f64>() / hs.len() as f64;
        let var = hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (hs.len() - 1) as f64;
        let sd = var.sqrt();
        if sd <= 0.0 {
            0.0
        } else {
            (m.distance - mean) / sd
        }
    }

    /// Node ids left after applying every merge at distance `<= delta`,
    /// then further merges until at most `max_clusters` remain.
    pub fn cut(&self, delta: f64, max_clusters: Option<usize>) -> Vec<usize> {
        let mut applied = self.merges.iter().take_while(|m| m.distance <= delta).count();
        if let Some(cap) = max_clusters {
            let cap = cap.max(1);
            applied = applied.max(self.leaves.saturating_sub(cap)).min(self.merges.len());
        }
        let mut alive = vec![true; self.leaves + applied];
        for m in &self.merges[..applied] {
            alive[m.left] = false;
            alive[m.right] = false;
        }
        let mut roots: Vec<usize> = (0..alive.len()).filter(|&i| alive[i]).collect();
        roots.sort_by_key(|&r| self.members(r)[0]);
        roots
    }

    /// Plot-ready CSV: one row per merge.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "left", "right", "distance", "id", "size"])?;
        for (s, m) in self.merges.iter().enumerate() {
            w.write_record([
                s.to_string(),
                m.left.to_string(),
                m.right.to_string(),
                m.distance.to_string(),
                m.id.to_string(),
                m.size.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dendrogram csv>", e))?;
        Ok(())
    }
}

/// Dendrogram plus the clusters that survive the cut.
#[derive(Clone, Debug)]
pub struct Agglomeration {
    pub dendrogram: Dendrogram,
    /// Surviving node ids, ordered by their smallest member.
    pub roots: Vec<usize>,
    pub delta: f64,
}

/// Complete-linkage clustering of sample rows, cut at `delta`.
pub fn agglomerate(samples: &DMatrix<f64>, delta: f64, max_clusters: Option<usize>) -> Result<Agglomeration> {
    if samples.nrows() == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be >= 0")));
    }
    let dendrogram = Dendrogram::build(samples)?;
    let roots = dendrogram.cut(delta, max_clusters);
    Ok(Agglomeration {
        dendrogram,
        roots,
        delta,
    })
}
