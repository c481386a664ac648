//! Shape descriptors of the rectangular ROI block.

pub const SHAPE_FEATURES: [&str; 5] = [
    "VoxelVolume",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "Elongation",
    "Flatness",
];

/// Principal variances of the voxel-centre coordinates of a full box, in mm²,
/// descending. Coordinates along separate axes are uncorrelated, so each axis
/// contributes the discrete-uniform variance `s²(d² - 1)/12`.
pub fn box_principal_variances(dims: [usize; 3], spacing: [f64; 3]) -> [f64; 3] {
    let mut v: Vec<f64> = (0..3)
        .map(|a| spacing[a] * spacing[a] * ((dims[a] * dims[a]) as f64 - 1.0) / 12.0)
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    [v[0], v[1], v[2]]
}

/// Elongation and flatness are `sqrt(minor/major)` and `sqrt(least/major)`;
/// both are 1 for a single voxel.
pub fn shape_features(dims: [usize; 3], spacing: [f64; 3]) -> Vec<(String, f64)> {
    let count = (dims[0] * dims[1] * dims[2]) as f64;
    let volume = count * spacing[0] * spacing[1] * spacing[2];
    let [a, b, c] = [0, 1, 2].map(|i| dims[i] as f64 * spacing[i]);
    let area = 2.0 * (a * b + b * c + a * c);
    let [major, minor, least] = box_principal_variances(dims, spacing);
    let (elong, flat) = if major > 0.0 {
        ((minor / major).sqrt(), (least / major).sqrt())
    } else {
        (1.0, 1.0)
    };
    SHAPE_FEATURES
        .iter()
        .zip([volume, area, area / volume, elong, flat])
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(f: &[(String, f64)], k: &str) -> f64 {
        f.iter().find(|x| x.0 == k).unwrap().1
    }

    #[test]
    fn cubes() {
        let f = shape_features([2, 2, 2], [1.0; 3]);
        assert_eq!(get(&f, "VoxelVolume"), 8.0);
        assert_eq!(get(&f, "SurfaceArea"), 24.0);
        assert_eq!(get(&f, "SurfaceVolumeRatio"), 3.0);
        let f = shape_features([1, 1, 1], [1.0; 3]);
        assert_eq!(get(&f, "VoxelVolume"), 1.0);
        assert_eq!(get(&f, "SurfaceArea"), 6.0);
        assert_eq!(get(&f, "Elongation"), 1.0);
    }

    #[test]
    fn exposed_faces_count_matches_area() {
        let dims = [3, 2, 4];
        let mut faces = 0;
        for z in 0..4i32 {
            for y in 0..2i32 {
                for x in 0..3i32 {
                    for (dx, dy, dz) in [
                        (1, 0, 0),
                        (-1, 0, 0),
                        (0, 1, 0),
                        (0, -1, 0),
                        (0, 0, 1),
                        (0, 0, -1),
                    ] {
                        let (nx, ny, nz) = (x + dx, y + dy, z + dz);
                        if nx < 0 || ny < 0 || nz < 0 || nx >= 3 || ny >= 2 || nz >= 4 {
                            faces += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(
            get(&shape_features(dims, [1.0; 3]), "SurfaceArea"),
            faces as f64
        );
    }

    /// Coordinate-PCA oracle: brute-force covariance of every voxel centre.
    #[test]
    fn pca_oracle_4x2x2() {
        let (dims, sp) = ([4usize, 2, 2], [1.0, 1.0, 1.0]);
        let mut pts = Vec::new();
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    pts.push([x as f64 * sp[0], y as f64 * sp[1], z as f64 * sp[2]]);
                }
            }
        }
        let n = pts.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|a| pts.iter().map(|p| p[a]).sum::<f64>() / n)
            .collect();
        let mut cov = [[0.0; 3]; 3];
        for p in &pts {
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / n;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(cov[i][j].abs() < 1e-12);
                }
            }
        }
        let mut eig = [cov[0][0], cov[1][1], cov[2][2]];
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let f = shape_features(dims, sp);
        assert!((get(&f, "Elongation") - (eig[1] / eig[0]).sqrt()).abs() < 1e-12);
        assert!((get(&f, "Flatness") - (eig[2] / eig[0]).sqrt()).abs() < 1e-12);
        assert!((get(&f, "Elongation") - 0.2f64.sqrt()).abs() < 1e-12);
    }
}
