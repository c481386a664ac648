//! Browser bindings: pixel-array graphs of phantom patches, the histogram
//! mutual-information estimator on correlated pairs, and Haar subband
//! energies. Every export returns a JSON string.

use pagrad_core::graph::{
    build_graph, graph_summary, mutual_information, GraphParams, GraphSummary,
};
use pagrad_core::radiomics::haar_subbands;
use pagrad_core::rng::stream;
use pagrad_core::spectral::{adjacency, eigendecompose};
use pagrad_core::volume::normalize_max;
use pagrad_core::volume::phantom::phantom_patch;
use pagrad_core::Result;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const PATCH_DIMS: [usize; 3] = [8, 8, 16];

#[derive(Debug, Serialize)]
pub struct GraphView {
    pub dims: [usize; 3],
    /// `[u, v, weight]`, node `i` sits at column `(i % dx, i / dx)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub degrees: Vec<usize>,
    /// Mean normalised intensity of each column.
    pub column_means: Vec<f64>,
    pub summary: GraphSummary,
    /// Full spectrum, descending.
    pub eigenvalues: Vec<f64>,
}

pub fn graph_view(
    snr: f64,
    label: u8,
    seed: u64,
    bins: usize,
    threshold: f64,
) -> Result<GraphView> {
    let patch = normalize_max(&phantom_patch(PATCH_DIMS, snr, label, seed))?;
    let g = build_graph(
        &patch,
        &GraphParams {
            bins,
            threshold,
            ..GraphParams::default()
        },
    )?;
    let [dx, dy, dz] = patch.dims;
    let column_means = (0..dy)
        .flat_map(|y| (0..dx).map(move |x| (x, y)))
        .map(|(x, y)| patch.column(x, y).iter().sum::<f64>() / dz as f64)
        .collect();
    let eigen = eigendecompose(&adjacency(&g))?;
    Ok(GraphView {
        dims: patch.dims,
        edges: g.edges.iter().map(|e| (e.u, e.v, e.w)).collect(),
        degrees: g.degrees(),
        column_means,
        summary: graph_summary(&g),
        eigenvalues: eigen.values,
    })
}

#[derive(Debug, Serialize)]
pub struct MiView {
    pub rho: f64,
    pub n: usize,
    pub bins: usize,
    /// Histogram estimate in nats.
    pub estimate: f64,
    /// `-ln(1 - rho^2) / 2`, the value for a bivariate normal.
    pub gaussian: f64,
    pub points: Vec<(f64, f64)>,
}

/// Min-max scales into [0, 1]; a constant series maps to 0.
fn unit_range(x: &[f64]) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

/// Draws `n` bivariate normal pairs with correlation `rho`; each coordinate
/// is min-max scaled before the histogram estimate.
pub fn mi_view(rho: f64, n: usize, bins: usize, seed: u64) -> Result<MiView> {
    if !(rho.abs() < 1.0) {
        return Err(pagrad_core::Error::InvalidArgument(format!(
            "rho must lie in (-1, 1), got {rho}"
        )));
    }
    let mut rng = stream(seed, &[]);
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a, rho * a + (1.0 - rho * rho).sqrt() * b)
        })
        .collect();
    let (u, v): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let estimate = mutual_information(&unit_range(&u), &unit_range(&v), bins)?;
    Ok(MiView {
        rho,
        n,
        bins,
        estimate,
        gaussian: 0.5 * (1.0 / (1.0 - rho * rho)).ln(),
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct SubbandEnergy {
    pub name: String,
    pub energy: f64,
}

#[derive(Debug, Serialize)]
pub struct WaveletView {
    pub total_energy: f64,
    pub subbands: Vec<SubbandEnergy>,
}

pub fn wavelet_view(snr: f64, label: u8, seed: u64) -> Result<WaveletView> {
    let patch = phantom_patch(PATCH_DIMS, snr, label, seed);
    let subbands = haar_subbands(&patch.voxels, patch.dims)
        .into_iter()
        .map(|(band, _, data)| SubbandEnergy {
            name: band.name(),
            energy: data.iter().map(|x| x * x).sum(),
        })
        .collect();
    Ok(WaveletView {
        total_energy: patch.voxels.iter().map(|x| x * x).sum(),
        subbands,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn pixel_graph(
    snr: f64,
    label: u8,
    seed: u32,
    bins: usize,
    threshold: f64,
) -> std::result::Result<String, JsError> {
    to_js(graph_view(snr, label, seed as u64, bins, threshold))
}

#[wasm_bindgen]
pub fn mi_demo(rho: f64, n: usize, bins: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(mi_view(rho, n, bins, seed as u64))
}

#[wasm_bindgen]
pub fn haar_energies(snr: f64, label: u8, seed: u32) -> std::result::Result<String, JsError> {
    to_js(wavelet_view(snr, label, seed as u64))
}
