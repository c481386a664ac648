//! Gray-level discretization and the co-occurrence / run-length texture
//! families over the 13 unique 3D neighbour directions.

use crate::error::{Error, Result};
use crate::volume::flat_index;

/// Discretized image with levels `1..=n_levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayGrid {
    pub dims: [usize; 3],
    pub levels: Vec<u32>,
    pub n_levels: u32,
}

impl GrayGrid {
    pub fn new(dims: [usize; 3], levels: Vec<u32>, n_levels: u32) -> Result<Self> {
        if dims.iter().product::<usize>() != levels.len() {
            return Err(Error::VoxelCountMismatch {
                expected: dims.iter().product(),
                found: levels.len(),
            });
        }
        if n_levels < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 gray levels, got {n_levels}"
            )));
        }
        if let Some(&bad) = levels.iter().find(|&&l| l == 0 || l > n_levels) {
            return Err(Error::InvalidArgument(format!(
                "gray level {bad} outside 1..={n_levels}"
            )));
        }
        Ok(Self {
            dims,
            levels,
            n_levels,
        })
    }

    #[inline]
    fn at(&self, p: [isize; 3]) -> Option<u32> {
        let inside = (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a]);
        inside.then(|| {
            self.levels[flat_index(self.dims, p[0] as usize, p[1] as usize, p[2] as usize)]
        })
    }
}

/// Equal-width bins over `[min, max]`, right-closed, so `max` maps to
/// `n_bins` and `min` to 1. A constant input maps entirely to level 1.
pub fn discretize(values: &[f64], n_bins: u32) -> Result<Vec<u32>> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_bins must be >= 2, got {n_bins}"
        )));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if !(range > 0.0) {
        return Ok(vec![1; values.len()]);
    }
    Ok(values
        .iter()
        .map(|&v| {
            let t = ((v - min) / range * n_bins as f64).ceil();
            (t as u32).clamp(1, n_bins)
        })
        .collect())
}

/// The 13 offsets whose first non-zero component (x, then y, then z) is
/// positive; together with their negations they cover the 26-neighbourhood.
pub fn directions() -> Vec<[isize; 3]> {
    let mut out = Vec::with_capacity(13);
    for dx in -1..=1isize {
        for dy in -1..=1isize {
            for dz in -1..=1isize {
                let positive = dx > 0 || (dx == 0 && dy > 0) || (dx == 0 && dy == 0 && dz > 0);
                if positive {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

fn for_each_point(dims: [usize; 3], mut f: impl FnMut([isize; 3])) {
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                f([x as isize, y as isize, z as isize]);
            }
        }
    }
}

fn add(p: [isize; 3], d: [isize; 3]) -> [isize; 3] {
    [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
}

fn sub(p: [isize; 3], d: [isize; 3]) -> [isize; 3] {
    [p[0] - d[0], p[1] - d[1], p[2] - d[2]]
}

fn mean_named(
    per_direction: Vec<Vec<f64>>,
    names: &[&str],
    dims: [usize; 3],
) -> Result<Vec<(String, f64)>> {
    if per_direction.is_empty() {
        return Err(Error::NoValidDirection(dims));
    }
    let m = per_direction.len() as f64;
    Ok(names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            (
                n.to_string(),
                per_direction.iter().map(|f| f[k]).sum::<f64>() / m,
            )
        })
        .collect())
}

// ---------------------------------------------------------------- GLCM

pub const GLCM_FEATURES: [&str; 8] = [
    "JointEnergy",
    "Contrast",
    "Correlation",
    "JointEntropy",
    "InverseDifferenceMoment",
    "ClusterShade",
    "ClusterProminence",
    "MaximumProbability",
];

/// Symmetric, normalized co-occurrence matrix (`n_levels²`, row-major, level
/// `i` at index `i - 1`) for one offset, or `None` when no voxel pair fits.
pub fn glcm_matrix(grid: &GrayGrid, offset: [isize; 3]) -> Option<Vec<f64>> {
    let n = grid.n_levels as usize;
    let mut counts = vec![0u64; n * n];
    let mut total = 0u64;
    for_each_point(grid.dims, |p| {
        let (Some(a), Some(b)) = (grid.at(p), grid.at(add(p, offset))) else {
            return;
        };
        let (i, j) = (a as usize - 1, b as usize - 1);
        counts[i * n + j] += 1;
        counts[j * n + i] += 1;
        total += 2;
    });
    (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect())
}

fn glcm_single(p: &[f64], n: usize) -> Vec<f64> {
    let lvl = |i: usize| (i + 1) as f64;
    let mut px = vec![0.0; n];
    for i in 0..n {
        px[i] = (0..n).map(|j| p[i * n + j]).sum();
    }
    let mu: f64 = (0..n).map(|i| lvl(i) * px[i]).sum();
    let var: f64 = (0..n).map(|i| (lvl(i) - mu).powi(2) * px[i]).sum();
    let (mut energy, mut contrast, mut cross, mut entropy, mut idm) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut shade, mut prominence, mut maxp) = (0.0, 0.0, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let v = p[i * n + j];
            if v == 0.0 {
                continue;
            }
            let (a, b) = (lvl(i), lvl(j));
            let d2 = (a - b) * (a - b);
            let s = a + b - 2.0 * mu;
            energy += v * v;
            contrast += d2 * v;
            cross += a * b * v;
            entropy -= v * v.log2();
            idm += v / (1.0 + d2);
            shade += s.powi(3) * v;
            prominence += s.powi(4) * v;
            maxp = maxp.max(v);
        }
    }
    // Symmetric matrix: both marginals share mean and variance. A flat
    // matrix is treated as perfectly correlated.
    let correlation = if var > 0.0 {
        (cross - mu * mu) / var
    } else {
        1.0
    };
    vec![
        energy,
        contrast,
        correlation,
        entropy,
        idm,
        shade,
        prominence,
        maxp,
    ]
}

pub fn glcm_features(grid: &GrayGrid) -> Result<Vec<(String, f64)>> {
    glcm_features_for(grid, &directions())
}

/// GLCM features averaged over the offsets that fit the grid.
pub fn glcm_features_for(grid: &GrayGrid, offsets: &[[isize; 3]]) -> Result<Vec<(String, f64)>> {
    let n = grid.n_levels as usize;
    let per: Vec<Vec<f64>> = offsets
        .iter()
        .filter_map(|&d| glcm_matrix(grid, d))
        .map(|p| glcm_single(&p, n))
        .collect();
    mean_named(per, &GLCM_FEATURES, grid.dims)
}

// --------------------------------------------------------------- GLRLM

pub const GLRLM_FEATURES: [&str; 6] = [
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "RunLengthNonUniformity",
    "RunPercentage",
    "ShortRunLowGrayLevelEmphasis",
];

/// Run-length matrix `[level - 1][length - 1]` for one direction, or `None`
/// when every line along it is a single voxel.
pub fn glrlm_matrix(grid: &GrayGrid, dir: [isize; 3]) -> Option<Vec<Vec<u64>>> {
    let max_len = *grid.dims.iter().max().unwrap_or(&1);
    let mut runs = vec![vec![0u64; max_len]; grid.n_levels as usize];
    let mut longest_line = 0usize;
    for_each_point(grid.dims, |start| {
        if grid.at(sub(start, dir)).is_some() {
            return;
        }
        let mut p = start;
        let mut line = 0usize;
        let mut current = None;
        let mut len = 0usize;
        while let Some(level) = grid.at(p) {
            line += 1;
            if current == Some(level) {
                len += 1;
            } else {
                if let Some(l) = current {
                    runs[l as usize - 1][len - 1] += 1;
                }
                current = Some(level);
                len = 1;
            }
            p = add(p, dir);
        }
        if let Some(l) = current {
            runs[l as usize - 1][len - 1] += 1;
        }
        longest_line = longest_line.max(line);
    });
    (longest_line >= 2).then_some(runs)
}

fn glrlm_single(runs: &[Vec<u64>], n_voxels: usize) -> Vec<f64> {
    let mut n_runs = 0.0;
    let (mut sre, mut lre, mut srlgle) = (0.0, 0.0, 0.0);
    let mut by_level = vec![0.0; runs.len()];
    let mut by_length = vec![0.0; runs.first().map_or(0, Vec::len)];
    for (i, row) in runs.iter().enumerate() {
        let g = (i + 1) as f64;
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let l = (j + 1) as f64;
            n_runs += c;
            sre += c / (l * l);
            lre += c * l * l;
            srlgle += c / (g * g * l * l);
            by_level[i] += c;
            by_length[j] += c;
        }
    }
    let gln = by_level.iter().map(|x| x * x).sum::<f64>() / n_runs;
    let rln = by_length.iter().map(|x| x * x).sum::<f64>() / n_runs;
    vec![
        sre / n_runs,
        lre / n_runs,
        gln,
        rln,
        n_runs / n_voxels as f64,
        srlgle / n_runs,
    ]
}

pub fn glrlm_features(grid: &GrayGrid) -> Result<Vec<(String, f64)>> {
    glrlm_features_for(grid, &directions())
}

pub fn glrlm_features_for(grid: &GrayGrid, dirs: &[[isize; 3]]) -> Result<Vec<(String, f64)>> {
    let per: Vec<Vec<f64>> = dirs
        .iter()
        .filter_map(|&d| glrlm_matrix(grid, d))
        .map(|r| glrlm_single(&r, grid.levels.len()))
        .collect();
    mean_named(per, &GLRLM_FEATURES, grid.dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn get(features: &[(String, f64)], name: &str) -> f64 {
        features.iter().find(|f| f.0 == name).unwrap().1
    }

    fn row(levels: &[u32], n: u32) -> GrayGrid {
        GrayGrid::new([levels.len(), 1, 1], levels.to_vec(), n).unwrap()
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(&[0.0, 0.5, 1.0], 2).unwrap(), vec![1, 1, 2]);
        assert_eq!(discretize(&[4.2; 5], 32).unwrap(), vec![1; 5]);
        assert!(discretize(&[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn discretize_matches_brute_force_binning() {
        let mut rng = crate::rng::stream(32, &[]);
        let v: Vec<f64> = (0..500).map(|_| rng.random_range(-3.0..7.0)).collect();
        let levels = discretize(&v, 32).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = (hi - lo) / 32.0;
        // Bin b (1-based) holds values in (lo + (b-1)w, lo + bw]; bin 1 is closed.
        let oracle = |x: f64| {
            (1..=32u32)
                .find(|&b| x <= lo + b as f64 * w || b == 32)
                .unwrap()
        };
        let mut hist = [0usize; 33];
        let mut oracle_hist = [0usize; 33];
        for (&x, &l) in v.iter().zip(&levels) {
            hist[l as usize] += 1;
            oracle_hist[oracle(x) as usize] += 1;
        }
        let moved: usize = hist
            .iter()
            .zip(&oracle_hist)
            .map(|(a, b)| a.abs_diff(*b))
            .sum();
        assert_eq!(moved, 0);
        assert_eq!(levels[v.iter().position(|&x| x == hi).unwrap()], 32);
        assert_eq!(levels[v.iter().position(|&x| x == lo).unwrap()], 1);
    }

    #[test]
    fn thirteen_directions() {
        let d = directions();
        assert_eq!(d.len(), 13);
        for a in &d {
            assert!(!d.contains(&[-a[0], -a[1], -a[2]]));
        }
    }

    #[test]
    fn glcm_hand_table() {
        let g = row(&[1, 1, 2, 2], 2);
        let p = glcm_matrix(&g, [1, 0, 0]).unwrap();
        let expect = [2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let f = glcm_features_for(&g, &[[1, 0, 0]]).unwrap();
        assert!((get(&f, "Contrast") - 1.0 / 3.0).abs() < 1e-12);
        // Only +x fits, so the 13-direction average is the same.
        let all = glcm_features(&g).unwrap();
        assert!((get(&all, "Contrast") - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn glcm_constant_grid() {
        let g = GrayGrid::new([3, 3, 3], vec![1; 27], 4).unwrap();
        let f = glcm_features(&g).unwrap();
        assert_eq!(get(&f, "MaximumProbability"), 1.0);
        assert_eq!(get(&f, "Contrast"), 0.0);
        assert_eq!(get(&f, "JointEntropy"), 0.0);
    }

    #[test]
    fn glcm_checkerboard_axis_contrast() {
        let dims = [4, 4, 4];
        let mut levels = Vec::new();
        for z in 0..4 {
            for y in 0..4 {
                for x in 0..4 {
                    levels.push(1 + ((x + y + z) % 2) as u32);
                }
            }
        }
        let g = GrayGrid::new(dims, levels, 2).unwrap();
        for axis in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            let f = glcm_features_for(&g, &[axis]).unwrap();
            assert!((get(&f, "Contrast") - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn glcm_matrices_are_symmetric_and_normalized() {
        let mut rng = crate::rng::stream(4, &[]);
        let levels: Vec<u32> = (0..5 * 4 * 3).map(|_| rng.random_range(1..=6)).collect();
        let g = GrayGrid::new([5, 4, 3], levels, 6).unwrap();
        for d in directions() {
            let p = glcm_matrix(&g, d).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..6 {
                for j in 0..6 {
                    assert_eq!(p[i * 6 + j], p[j * 6 + i]);
                }
            }
        }
    }

    #[test]
    fn glrlm_hand_table() {
        let g = row(&[1, 1, 2, 2, 2], 4);
        let f = glrlm_features(&g).unwrap();
        assert!((get(&f, "ShortRunEmphasis") - (0.25 + 1.0 / 9.0) / 2.0).abs() < 1e-12);
        assert!((get(&f, "ShortRunLowGrayLevelEmphasis") - 0.138_888_888_888_888_9).abs() < 1e-9);
        assert!((get(&f, "RunPercentage") - 0.4).abs() < 1e-15);
    }

    #[test]
    fn glrlm_constant_and_alternating_rows() {
        let f = glrlm_features(&row(&[3; 6], 3)).unwrap();
        assert_eq!(get(&f, "LongRunEmphasis"), 36.0);
        let f = glrlm_features(&row(&[1, 2, 1, 2, 1, 2], 2)).unwrap();
        assert_eq!(get(&f, "RunPercentage"), 1.0);
    }

    #[test]
    fn glrlm_run_percentage_bounds() {
        let mut rng = crate::rng::stream(5, &[]);
        let levels: Vec<u32> = (0..64).map(|_| rng.random_range(1..=3)).collect();
        let g = GrayGrid::new([4, 4, 4], levels, 3).unwrap();
        let rp = get(&glrlm_features(&g).unwrap(), "RunPercentage");
        assert!(rp > 0.0 && rp <= 1.0);
    }

    #[test]
    fn single_voxel_has_no_direction() {
        let g = GrayGrid::new([1, 1, 1], vec![1], 2).unwrap();
        assert!(matches!(glcm_features(&g), Err(Error::NoValidDirection(_))));
        assert!(matches!(
            glrlm_features(&g),
            Err(Error::NoValidDirection(_))
        ));
    }

    #[test]
    fn axis_relabeling_invariance() {
        let mut rng = crate::rng::stream(6, &[]);
        let dims = [3, 4, 5];
        let levels: Vec<u32> = (0..60).map(|_| rng.random_range(1..=4)).collect();
        let g = GrayGrid::new(dims, levels.clone(), 4).unwrap();
        // Swap x and z.
        let tdims = [5, 4, 3];
        let mut t = vec![0; 60];
        for z in 0..5 {
            for y in 0..4 {
                for x in 0..3 {
                    t[flat_index(tdims, z, y, x)] = levels[flat_index(dims, x, y, z)];
                }
            }
        }
        let h = GrayGrid::new(tdims, t, 4).unwrap();
        for (a, b) in glcm_features(&g)
            .unwrap()
            .iter()
            .zip(glcm_features(&h).unwrap())
        {
            assert!((a.1 - b.1).abs() < 1e-12, "{}", a.0);
        }
        for (a, b) in glrlm_features(&g)
            .unwrap()
            .iter()
            .zip(glrlm_features(&h).unwrap())
        {
            assert!((a.1 - b.1).abs() < 1e-12, "{}", a.0);
        }
    }
}
