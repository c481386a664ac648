//! Adjacency spectra of pixel-array graphs.
//!
//! Eigenpairs come from a cyclic Jacobi solver; correctness is checked by
//! residuals, not by agreement with any particular library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PixelArrayGraph;

pub const DEFAULT_K: usize = 8;
const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Dense symmetric `n × n` matrix, row-major, zero diagonal when built from a
/// graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl AdjacencyMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix must be square".into()));
        }
        Ok(Self {
            n,
            values: rows.concat(),
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns `A·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}

/// Isolated nodes keep all-zero rows so dimensions stay at `n_total`.
pub fn adjacency(g: &PixelArrayGraph) -> AdjacencyMatrix {
    let n = g.n_total;
    let mut values = vec![0.0; n * n];
    for e in &g.edges {
        values[e.u * n + e.v] = e.w;
        values[e.v * n + e.u] = e.w;
    }
    AdjacencyMatrix { n, values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Descending algebraic order.
    pub values: Vec<f64>,
    /// `vectors[i]` pairs with `values[i]`; unit norm, largest-magnitude entry
    /// positive (lowest index on ties).
    pub vectors: Vec<Vec<f64>>,
}

pub fn eigendecompose(a: &AdjacencyMatrix) -> Result<Eigen> {
    let n = a.n;
    if a.values.len() != n * n {
        return Err(Error::InvalidArgument(
            "matrix storage does not match n".into(),
        ));
    }
    if let Some(bad) = a.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite matrix entry {bad}"
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            let diff = (a.get(i, j) - a.get(j, i)).abs();
            if diff > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { i, j, diff });
            }
        }
    }
    // Work on the symmetrized copy.
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    jacobi(&mut m, &mut v, n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &c in &order {
        values.push(m[c * n + c]);
        let mut col: Vec<f64> = (0..n).map(|r| v[r * n + c]).collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut pivot = 0;
        for (k, x) in col.iter().enumerate() {
            if x.abs() > col[pivot].abs() {
                pivot = k;
            }
        }
        let scale = if col[pivot] < 0.0 {
            -1.0 / norm
        } else {
            1.0 / norm
        };
        for x in &mut col {
            *x *= scale;
        }
        vectors.push(col);
    }
    Ok(Eigen { values, vectors })
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// `v` accumulates the rotations (columns are eigenvectors).
fn jacobi(m: &mut [f64], v: &mut [f64], n: usize) {
    let total: f64 = m.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return;
    }
    let eps = f64::EPSILON * f64::EPSILON * total;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= eps {
            return;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    log::warn!("jacobi eigensolver hit {MAX_SWEEPS} sweeps without full convergence");
}

/// Top-k eigenvectors flattened eigenvector-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatureVector {
    pub k: usize,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub features: Vec<f64>,
}

impl SpectralFeatureVector {
    /// Column names `eig<i>_node<j>`; `i` counts from 1 (largest eigenvalue),
    /// `j` is the graph node index.
    pub fn feature_names(k: usize, n: usize) -> Vec<String> {
        let mut names = Vec::with_capacity(k * n);
        for i in 1..=k {
            for j in 0..n {
                names.push(format!("eig{i}_node{j}"));
            }
        }
        names
    }
}

pub fn spectral_features(a: &AdjacencyMatrix, k: usize) -> Result<SpectralFeatureVector> {
    if k > a.n {
        return Err(Error::InsufficientNodes { k, n: a.n });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let eig = eigendecompose(a)?;
    Ok(SpectralFeatureVector {
        k,
        n: a.n,
        eigenvalues: eig.values[..k].to_vec(),
        features: eig.vectors[..k].concat(),
    })
}

/// Spectral features for a cohort of one region; every subject must have
/// the same node count.
pub fn cohort_spectral_features(
    subjects: &[(String, AdjacencyMatrix)],
    k: usize,
) -> Result<Vec<SpectralFeatureVector>> {
    let Some((_, first)) = subjects.first() else {
        return Ok(Vec::new());
    };
    for (id, a) in subjects {
        if a.n != first.n {
            return Err(Error::InconsistentRoiDims {
                expected: first.n,
                found: a.n,
                subject: id.clone(),
            });
        }
    }
    let out = crate::par::map_indexed(subjects, |_, (_, a)| spectral_features(a, k));
    crate::par::try_collect(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use rand::Rng;

    fn seeded_symmetric(n: usize, seed: u64) -> AdjacencyMatrix {
        let mut rng = crate::rng::stream(seed, &[]);
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = rng.random_range(-1.0..1.0);
                rows[i][j] = x;
                rows[j][i] = x;
            }
        }
        AdjacencyMatrix::from_rows(&rows).unwrap()
    }

    fn residual(a: &AdjacencyMatrix, lambda: f64, v: &[f64]) -> f64 {
        let av = a.apply(v);
        av.iter()
            .zip(v)
            .map(|(x, y)| (x - lambda * y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn adjacency_examples() {
        let g = PixelArrayGraph {
            n_total: 2,
            edges: vec![Edge { u: 0, v: 1, w: 1.0 }],
            bins: 16,
            m_min: 0.0,
            m_max: 0.0,
        };
        assert_eq!(adjacency(&g).values, vec![0.0, 1.0, 1.0, 0.0]);
        let g = PixelArrayGraph {
            n_total: 3,
            edges: vec![],
            bins: 16,
            m_min: 0.0,
            m_max: 0.0,
        };
        assert_eq!(adjacency(&g).values, vec![0.0; 9]);
    }

    #[test]
    fn adjacency_matches_edge_list_oracle() {
        let mut rng = crate::rng::stream(8, &[]);
        let n = 7;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < 0.4 {
                    edges.push(Edge {
                        u,
                        v,
                        w: rng.random_range(0.5..=1.0),
                    });
                }
            }
        }
        let g = PixelArrayGraph {
            n_total: n,
            edges: edges.clone(),
            bins: 16,
            m_min: 0.0,
            m_max: 1.0,
        };
        let a = adjacency(&g);
        for i in 0..n {
            assert_eq!(a.get(i, i), 0.0);
            for j in 0..n {
                assert_eq!(a.get(i, j), a.get(j, i));
                let w = edges
                    .iter()
                    .find(|e| (e.u, e.v) == (i.min(j), i.max(j)))
                    .map_or(0.0, |e| e.w);
                assert_eq!(a.get(i, j), if i == j { 0.0 } else { w });
            }
        }
    }

    #[test]
    fn textbook_two_by_two() {
        let a = AdjacencyMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eigendecompose(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - h).abs() < 1e-12 && (e.vectors[0][1] - h).abs() < 1e-12);
        assert!((e.vectors[1][0] - h).abs() < 1e-12 && (e.vectors[1][1] + h).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let a = AdjacencyMatrix {
            n: 3,
            values: vec![0.0; 9],
        };
        let e = eigendecompose(&a).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        for v in &e.vectors {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_residuals() {
        for seed in 0..5 {
            let a = seeded_symmetric(6, seed);
            let e = eigendecompose(&a).unwrap();
            let fro = a.frobenius_norm();
            for (l, v) in e.values.iter().zip(&e.vectors) {
                assert!(residual(&a, *l, v) <= 1e-8 * fro);
            }
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = AdjacencyMatrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            eigendecompose(&a),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn top_one_feature() {
        let a = AdjacencyMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = spectral_features(&a, 1).unwrap();
        assert_eq!(f.eigenvalues.len(), 1);
        assert!((f.eigenvalues[0] - 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(f.features.iter().all(|x| (x - h).abs() < 1e-12));
        assert!(matches!(
            spectral_features(&a, 3),
            Err(Error::InsufficientNodes { k: 3, n: 2 })
        ));
    }

    #[test]
    fn full_k_is_orthonormal() {
        let a = seeded_symmetric(9, 99);
        let f = spectral_features(&a, 9).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let vi = &f.features[i * 9..(i + 1) * 9];
                let vj = &f.features[j * 9..(j + 1) * 9];
                let dot: f64 = vi.iter().zip(vj).map(|(x, y)| x * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn permutation_preserves_eigenvalues() {
        let a = seeded_symmetric(6, 4);
        let perm = [3, 0, 5, 1, 4, 2];
        let mut rows = vec![vec![0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                rows[i][j] = a.get(perm[i], perm[j]);
            }
        }
        let b = AdjacencyMatrix::from_rows(&rows).unwrap();
        let (ea, eb) = (eigendecompose(&a).unwrap(), eigendecompose(&b).unwrap());
        for (x, y) in ea.values.iter().zip(&eb.values) {
            assert!((x - y).abs() < 1e-12);
        }
        // Simple spectrum: eigenvectors permute with the nodes.
        for (va, vb) in ea.vectors.iter().zip(&eb.vectors) {
            for i in 0..6 {
                assert!((vb[i] - va[perm[i]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cohort_requires_uniform_node_count() {
        let a = seeded_symmetric(8, 1);
        let b = seeded_symmetric(9, 2);
        let err =
            cohort_spectral_features(&[("s1".into(), a.clone()), ("s2".into(), b)], 2).unwrap_err();
        assert!(err.to_string().contains("inconsistent ROI dims"));
        let ok =
            cohort_spectral_features(&[("s1".into(), a.clone()), ("s2".into(), a)], 8).unwrap();
        assert_eq!(ok[0].features.len(), 64);
        assert_eq!(SpectralFeatureVector::feature_names(2, 3)[4], "eig2_node1");
    }
}
