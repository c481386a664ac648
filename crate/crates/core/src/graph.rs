//! Pixel-array graphs: every `(x, y)` column of a max-normalized patch is a
//! node, every unordered node pair is weighted by the histogram mutual
//! information of the two columns, min-max normalized over the graph, and
//! pairs below the threshold are dropped.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::volume::RoiPatch;

pub const DEFAULT_BINS: usize = 16;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Histogram MI takes few distinct values, so normalized weights often sit
/// exactly on the threshold. Weights this close below it are treated as ties
/// and kept (stored as the threshold).
pub const THRESHOLD_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Equal-width joint-histogram mutual information over `[0, 1]²`, natural
/// log. A value of exactly 1 falls in the top bin.
pub fn mutual_information(u: &[f64], v: &[f64], bins: usize) -> Result<f64> {
    mutual_information_base(u, v, bins, LogBase::Natural)
}

pub fn mutual_information_base(u: &[f64], v: &[f64], bins: usize, base: LogBase) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::InvalidArgument(
            "sequences need at least two samples".into(),
        ));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "bins must be >= 2, got {bins}"
        )));
    }
    if let Some(bad) = u.iter().chain(v).find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!(
            "value {bad} outside [0, 1]"
        )));
    }
    let bu: Vec<usize> = u.iter().map(|&x| bin_of(x, bins)).collect();
    let bv: Vec<usize> = v.iter().map(|&x| bin_of(x, bins)).collect();
    Ok(mi_from_bins(&bu, &bv, bins, base))
}

/// MI from pre-binned sequences. Terms are summed in sorted order so the
/// result is bit-identical when the arguments are swapped.
fn mi_from_bins(bu: &[usize], bv: &[usize], bins: usize, base: LogBase) -> f64 {
    let n = bu.len();
    let mut joint = vec![0u32; bins * bins];
    let mut mu = vec![0u32; bins];
    let mut mv = vec![0u32; bins];
    for (&a, &b) in bu.iter().zip(bv) {
        joint[a * bins + b] += 1;
        mu[a] += 1;
        mv[b] += 1;
    }
    let nf = n as f64;
    let mut terms: Vec<f64> = Vec::with_capacity(n);
    for a in 0..bins {
        if mu[a] == 0 {
            continue;
        }
        for b in 0..bins {
            let c = joint[a * bins + b];
            if c == 0 {
                continue;
            }
            let ratio = (c as f64 * nf) / (mu[a] as f64 * mv[b] as f64);
            terms.push(c as f64 / nf * base.log(ratio));
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub bins: usize,
    pub threshold: f64,
    pub log_base: LogBase,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            threshold: DEFAULT_THRESHOLD,
            log_base: LogBase::Natural,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Weighted undirected graph over the `x·y` columns of a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelArrayGraph {
    pub n_total: usize,
    /// Sorted by `(u, v)` with `u < v`.
    pub edges: Vec<Edge>,
    pub bins: usize,
    pub m_min: f64,
    pub m_max: f64,
}

/// Index of the unordered pair `(i, j)`, `i < j`, in row-major pair order.
fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Raw MI for every unordered column pair, in row-major pair order.
pub fn raw_mi_matrix(
    patch: &RoiPatch,
    bins: usize,
    base: LogBase,
) -> Result<Vec<((usize, usize), f64)>> {
    let [dx, dy, dz] = patch.dims;
    if dz < 2 {
        return Err(Error::InvalidArgument(format!(
            "patch needs dz >= 2, got {dz}"
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "bins must be >= 2, got {bins}"
        )));
    }
    if let Some(bad) = patch.voxels.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!(
            "patch value {bad} outside [0, 1]; max-normalize first"
        )));
    }
    let n = dx * dy;
    let columns: Vec<Vec<usize>> = (0..n)
        .map(|node| {
            let (x, y) = (node % dx, node / dx);
            patch
                .column(x, y)
                .into_iter()
                .map(|v| bin_of(v, bins))
                .collect()
        })
        .collect();
    let pairs = pair_list(n);
    let mi = par::map_indexed(&pairs, |_, &(i, j)| {
        mi_from_bins(&columns[i], &columns[j], bins, base)
    });
    Ok(pairs.into_iter().zip(mi).collect())
}

/// Builds the thresholded graph of a max-normalized patch.
///
/// When every raw MI is equal and positive all pairs get weight 1; when every
/// raw MI is zero the graph is edgeless.
pub fn build_graph(patch: &RoiPatch, params: &GraphParams) -> Result<PixelArrayGraph> {
    if !(0.0..=1.0).contains(&params.threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in [0, 1], got {}",
            params.threshold
        )));
    }
    let raw = raw_mi_matrix(patch, params.bins, params.log_base)?;
    let n_total = patch.dims[0] * patch.dims[1];
    let (m_min, m_max) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, m)| {
            (lo.min(m), hi.max(m))
        });
    let mut edges = Vec::new();
    if !raw.is_empty() {
        if m_max == m_min {
            if m_max > 0.0 {
                edges.extend(raw.iter().map(|&((u, v), _)| Edge { u, v, w: 1.0 }));
            }
        } else {
            let span = m_max - m_min;
            for &((u, v), m) in &raw {
                let w = (m - m_min) / span;
                if w >= params.threshold {
                    edges.push(Edge { u, v, w });
                } else if w >= params.threshold - THRESHOLD_TIE_TOL {
                    edges.push(Edge {
                        u,
                        v,
                        w: params.threshold,
                    });
                }
            }
        }
    }
    let (m_min, m_max) = if raw.is_empty() {
        (0.0, 0.0)
    } else {
        (m_min, m_max)
    };
    Ok(PixelArrayGraph {
        n_total,
        edges,
        bins: params.bins,
        m_min,
        m_max,
    })
}

impl PixelArrayGraph {
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_total];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Whether the nodes with at least one edge form a single component.
    /// Edgeless graphs count as not connected.
    pub fn active_nodes_connected(&self) -> bool {
        if self.edges.is_empty() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.n_total).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            if a != b {
                parent[a] = b;
            }
        }
        let deg = self.degrees();
        let mut root = None;
        for (i, &d) in deg.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let r = find(&mut parent, i);
            match root {
                None => root = Some(r),
                Some(r0) if r0 != r => return false,
                _ => {}
            }
        }
        true
    }

    /// Writes the edge list as `u,v,w`.
    pub fn write_edges_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["u", "v", "w"])?;
        for e in &self.edges {
            w.write_record([e.u.to_string(), e.v.to_string(), e.w.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub num_edges: usize,
    /// Nodes of degree >= 1.
    pub num_active_nodes: usize,
    /// Mean edge weight, 0 for an edgeless graph.
    pub avg_edge_weight: f64,
}

pub fn graph_summary(g: &PixelArrayGraph) -> GraphSummary {
    let num_active_nodes = g.degrees().iter().filter(|&&d| d > 0).count();
    let avg_edge_weight = if g.edges.is_empty() {
        0.0
    } else {
        g.edges.iter().map(|e| e.w).sum::<f64>() / g.edges.len() as f64
    };
    GraphSummary {
        num_edges: g.edges.len(),
        num_active_nodes,
        avg_edge_weight,
    }
}

impl GraphSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["num_edges", "num_active_nodes", "avg_edge_weight"])?;
        w.write_record([
            self.num_edges.to_string(),
            self.num_active_nodes.to_string(),
            self.avg_edge_weight.to_string(),
        ])?;
        w.flush().map_err(|e| Error::io("<summary>", e))
    }
}
