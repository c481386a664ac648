//! Volumes, ROI patches, intensity normalization, resampling and synthetic
//! phantom cohorts.

mod io;
pub mod phantom;
mod resample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_manifest, load_volume, save_manifest, save_volume, ManifestRow};
pub use phantom::{generate_phantom, Phantom, PhantomConfig};
pub use resample::{resample, Interpolation};

/// Flat index of `(x, y, z)` in an x-fastest grid.
#[inline]
pub fn flat_index(dims: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

/// A dense 3D intensity grid, x-fastest, with voxel spacing in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    dims: [usize; 3],
    spacing: [f64; 3],
    voxels: Vec<f32>,
}

impl Volume3D {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], voxels: Vec<f32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if voxels.len() != expected {
            return Err(Error::VoxelCountMismatch {
                expected,
                found: voxels.len(),
            });
        }
        check_intensities(voxels.iter().map(|&v| v as f64))?;
        Ok(Self {
            dims,
            spacing,
            voxels,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.voxels[flat_index(self.dims, x, y, z)]
    }

    /// Returns a copy with every voxel multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f32) -> Result<Self> {
        Self::new(
            self.dims,
            self.spacing,
            self.voxels.iter().map(|&v| v * factor).collect(),
        )
    }
}

fn check_intensities(values: impl Iterator<Item = f64>) -> Result<()> {
    for (index, value) in values.enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidVoxel { index, value });
        }
    }
    Ok(())
}

/// Anatomical region an ROI was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    LeftCistern,
    RightCistern,
    Bone,
    CorpusCallosum,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::LeftCistern,
        Region::RightCistern,
        Region::Bone,
        Region::CorpusCallosum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::LeftCistern => "left_cistern",
            Region::RightCistern => "right_cistern",
            Region::Bone => "bone",
            Region::CorpusCallosum => "corpus_callosum",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown region {s:?}")))
    }
}

/// Axis-aligned box inside a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub region: Region,
    pub origin: [usize; 3],
    pub size: [usize; 3],
}

impl RoiSpec {
    pub fn fits(&self, dims: [usize; 3]) -> bool {
        (0..3).all(|a| self.size[a] > 0 && self.origin[a] + self.size[a] <= dims[a])
    }
}

/// A labelled sub-block of a volume, held in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiPatch {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub voxels: Vec<f64>,
    pub subject_id: String,
    pub region: Region,
    /// 0 = control, 1 = patient.
    pub label: u8,
}

impl RoiPatch {
    /// Builds an unlabelled patch (subject id empty, label 0) from raw voxels.
    pub fn from_voxels(dims: [usize; 3], voxels: Vec<f64>) -> Result<Self> {
        let expected = dims[0] * dims[1] * dims[2];
        if expected == 0 {
            return Err(Error::InvalidVolume(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if voxels.len() != expected {
            return Err(Error::VoxelCountMismatch {
                expected,
                found: voxels.len(),
            });
        }
        Ok(Self {
            dims,
            spacing: [1.0; 3],
            voxels,
            subject_id: String::new(),
            region: Region::LeftCistern,
            label: 0,
        })
    }

    pub fn labeled(mut self, subject_id: impl Into<String>, label: u8) -> Self {
        self.subject_id = subject_id.into();
        self.label = label;
        self
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[flat_index(self.dims, x, y, z)]
    }

    /// The z-direction intensity sequence at `(x, y)`.
    pub fn column(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.dims[2]).map(|z| self.get(x, y, z)).collect()
    }

    /// Same metadata, new voxel values (and possibly dims).
    pub fn with_voxels(&self, dims: [usize; 3], voxels: Vec<f64>) -> Self {
        debug_assert_eq!(dims[0] * dims[1] * dims[2], voxels.len());
        Self {
            dims,
            spacing: self.spacing,
            voxels,
            subject_id: self.subject_id.clone(),
            region: self.region,
            label: self.label,
        }
    }

    /// Converts to a single-precision volume (intensities clamped at zero).
    pub fn to_volume(&self) -> Result<Volume3D> {
        Volume3D::new(
            self.dims,
            self.spacing,
            self.voxels.iter().map(|&v| v.max(0.0) as f32).collect(),
        )
    }
}

/// Copies the sub-block described by `spec`, preserving x-fastest order.
pub fn extract_roi(vol: &Volume3D, spec: &RoiSpec) -> Result<RoiPatch> {
    let dims = vol.dims();
    if !spec.fits(dims) {
        return Err(Error::RoiOutOfBounds {
            origin: spec.origin,
            size: spec.size,
            dims,
        });
    }
    let [dx, dy, dz] = spec.size;
    let [x0, y0, z0] = spec.origin;
    let mut voxels = Vec::with_capacity(dx * dy * dz);
    for z in z0..z0 + dz {
        for y in y0..y0 + dy {
            let start = flat_index(dims, x0, y, z);
            voxels.extend(vol.voxels()[start..start + dx].iter().map(|&v| v as f64));
        }
    }
    Ok(RoiPatch {
        dims: spec.size,
        spacing: vol.spacing(),
        voxels,
        subject_id: String::new(),
        region: spec.region,
        label: 0,
    })
}

/// Divides every voxel by the patch maximum so the result spans `[0, 1]` with
/// a maximum of exactly 1.
pub fn normalize_max(patch: &RoiPatch) -> Result<RoiPatch> {
    check_intensities(patch.voxels.iter().copied())?;
    let max = patch.voxels.iter().copied().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::DegeneratePatch);
    }
    let voxels = patch.voxels.iter().map(|&v| v / max).collect();
    Ok(patch.with_voxels(patch.dims, voxels))
}

/// Z-score normalization with the population standard deviation.
pub fn zscore_normalize(patch: &RoiPatch) -> Result<RoiPatch> {
    let v = &patch.voxels;
    if v.is_empty() || v.iter().all(|&x| x == v[0]) {
        return Err(Error::ZeroVariance);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let voxels = v.iter().map(|&x| (x - mean) / std).collect();
    Ok(patch.with_voxels(patch.dims, voxels))
}
