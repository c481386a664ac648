//! Seeded synthetic cohorts.
//!
//! Each subject gets one volume holding four ROI blocks laid side by side
//! along x, one per [`Region`]. Inside a block every `(x, y)` column is a
//! z-signal:
//!
//! * controls: one latent z-signal shared by every column, scaled by `snr`,
//!   plus unit Gaussian noise. Columns are strongly dependent.
//! * patients: unit noise everywhere; a minority of columns additionally carry
//!   one of two weak latent signals. Most columns are independent.
//!
//! With `snr = 0` both groups are pure noise. With `snr = ∞` control columns
//! are exactly identical.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    flat_index, save_manifest, save_volume, ManifestRow, Region, RoiPatch, RoiSpec, Volume3D,
};
use crate::error::{Error, Result};
use crate::rng;

/// Fraction of patient columns that carry a latent signal.
const PATIENT_SIGNAL_FRACTION: f64 = 0.25;
/// Patient signal amplitude relative to the control amplitude.
const PATIENT_SIGNAL_GAIN: f64 = 0.5;
const PATIENT_LATENTS: usize = 2;
const BASELINE: f64 = 100.0;
const CONTRAST: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub n_per_group: usize,
    pub roi_dims: [usize; 3],
    /// Latent-signal to noise amplitude ratio; `0` is noise only and
    /// `f64::INFINITY` drops the noise.
    pub snr: f64,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            n_per_group: 20,
            roi_dims: [8, 8, 16],
            snr: 4.0,
            seed: 7,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_group < 2 {
            return Err(Error::InvalidArgument(
                "n_per_group must be at least 2".into(),
            ));
        }
        if self.roi_dims.contains(&0) {
            return Err(Error::InvalidArgument("roi dims must be positive".into()));
        }
        if self.roi_dims[2] < 4 {
            return Err(Error::InvalidArgument("roi dz must be at least 4".into()));
        }
        if self.snr.is_nan() || self.snr < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "snr must be >= 0, got {}",
                self.snr
            )));
        }
        Ok(())
    }
}

/// A generated cohort held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    /// Manifest rows; `volume_path` is relative (`volumes/<subject>.hdr`).
    pub manifest: Vec<ManifestRow>,
    /// One volume per subject, in subject order.
    pub volumes: Vec<(String, Volume3D)>,
    pub rois: Vec<RoiSpec>,
}

impl Phantom {
    /// Writes `manifest.csv` and `volumes/*.hdr|raw` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let vdir = dir.join("volumes");
        std::fs::create_dir_all(&vdir).map_err(|e| Error::io(&vdir, e))?;
        for (id, vol) in &self.volumes {
            save_volume(vol, vdir.join(format!("{id}.hdr")))?;
        }
        let manifest = dir.join("manifest.csv");
        save_manifest(&self.manifest, &manifest)?;
        Ok(manifest)
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generates one ROI block of z-columns for a subject of the given label.
/// Pure function of its arguments.
pub fn phantom_patch(dims: [usize; 3], snr: f64, label: u8, seed: u64) -> RoiPatch {
    let mut rng = rng::stream(seed, &[]);
    let [dx, dy, dz] = dims;
    let (signal_w, noise_w) = if snr.is_infinite() {
        (1.0, 0.0)
    } else {
        (snr, 1.0)
    };
    let scale = (signal_w * signal_w + noise_w * noise_w).sqrt().max(1.0);
    let latent: Vec<Vec<f64>> = (0..PATIENT_LATENTS.max(1))
        .map(|_| (0..dz).map(|_| normal(&mut rng)).collect())
        .collect();
    let mut voxels = vec![0.0; dx * dy * dz];
    for y in 0..dy {
        for x in 0..dx {
            let carrier = if label == 0 {
                Some((0, signal_w))
            } else if rng.random::<f64>() < PATIENT_SIGNAL_FRACTION {
                Some((
                    rng.random_range(0..PATIENT_LATENTS),
                    signal_w * PATIENT_SIGNAL_GAIN,
                ))
            } else {
                None
            };
            for z in 0..dz {
                let mut v = noise_w * normal(&mut rng);
                if let Some((k, amp)) = carrier {
                    v += amp * latent[k][z];
                }
                voxels[flat_index(dims, x, y, z)] = (BASELINE + CONTRAST * v / scale).max(0.0);
            }
        }
    }
    RoiPatch {
        dims,
        spacing: [1.0; 3],
        voxels,
        subject_id: String::new(),
        region: Region::LeftCistern,
        label,
    }
}

/// Subject `i` is a control for `i < n_per_group`, a patient otherwise.
pub fn generate_phantom(cfg: &PhantomConfig) -> Result<Phantom> {
    cfg.validate()?;
    let [dx, dy, dz] = cfg.roi_dims;
    let vol_dims = [dx * Region::ALL.len(), dy, dz];
    let n = 2 * cfg.n_per_group;
    let rois: Vec<RoiSpec> = Region::ALL
        .iter()
        .enumerate()
        .map(|(r, &region)| RoiSpec {
            region,
            origin: [r * dx, 0, 0],
            size: cfg.roi_dims,
        })
        .collect();
    let mut manifest = Vec::with_capacity(n * rois.len());
    let mut volumes = Vec::with_capacity(n);
    for s in 0..n {
        let id = format!("sub-{s:03}");
        let label = u8::from(s >= cfg.n_per_group);
        let mut voxels = vec![0f32; vol_dims.iter().product()];
        for (r, roi) in rois.iter().enumerate() {
            let seed = rng::derive_seed(cfg.seed, &[s as u64, r as u64]);
            let patch = phantom_patch(cfg.roi_dims, cfg.snr, label, seed);
            for z in 0..dz {
                for y in 0..dy {
                    for x in 0..dx {
                        voxels[flat_index(vol_dims, roi.origin[0] + x, y, z)] =
                            patch.get(x, y, z) as f32;
                    }
                }
            }
            manifest.push(ManifestRow {
                subject_id: id.clone(),
                label,
                region: roi.region,
                volume_path: PathBuf::from(format!("volumes/{id}.hdr")),
                roi_origin: roi.origin,
                roi_size: roi.size,
            });
        }
        volumes.push((id, Volume3D::new(vol_dims, [1.0; 3], voxels)?));
    }
    Ok(Phantom {
        manifest,
        volumes,
        rois,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::extract_roi;

    fn small() -> PhantomConfig {
        PhantomConfig {
            n_per_group: 3,
            roi_dims: [4, 4, 8],
            snr: 4.0,
            seed: 11,
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = generate_phantom(&small()).unwrap();
        let b = generate_phantom(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_phantom(&PhantomConfig {
            seed: 12,
            ..small()
        })
        .unwrap();
        assert_ne!(a.volumes, c.volumes);
    }

    #[test]
    fn layout_and_counts() {
        let p = generate_phantom(&small()).unwrap();
        assert_eq!(p.volumes.len(), 6);
        assert_eq!(p.manifest.len(), 6 * 4);
        for region in Region::ALL {
            let rows: Vec<_> = p.manifest.iter().filter(|r| r.region == region).collect();
            assert_eq!(rows.len(), 6);
            assert_eq!(rows.iter().filter(|r| r.label == 1).count(), 3);
        }
        for (_, v) in &p.volumes {
            assert_eq!(v.dims(), [16, 4, 8]);
            for roi in &p.rois {
                assert!(roi.fits(v.dims()));
            }
        }
    }

    #[test]
    fn infinite_snr_controls_have_identical_columns() {
        let cfg = PhantomConfig {
            snr: f64::INFINITY,
            ..small()
        };
        let p = generate_phantom(&cfg).unwrap();
        let vol = &p.volumes[0].1;
        let patch = extract_roi(vol, &p.rois[0]).unwrap();
        let first = patch.column(0, 0);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(patch.column(x, y), first);
            }
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(generate_phantom(&PhantomConfig {
            n_per_group: 1,
            ..small()
        })
        .is_err());
        assert!(generate_phantom(&PhantomConfig {
            roi_dims: [4, 4, 3],
            ..small()
        })
        .is_err());
        assert!(generate_phantom(&PhantomConfig {
            snr: -1.0,
            ..small()
        })
        .is_err());
        assert!(generate_phantom(&PhantomConfig {
            snr: f64::NAN,
            ..small()
        })
        .is_err());
    }

    #[test]
    fn write_creates_loadable_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let p = generate_phantom(&small()).unwrap();
        let manifest = p.write(dir.path()).unwrap();
        let rows = crate::volume::load_manifest(&manifest).unwrap();
        assert_eq!(rows.len(), p.manifest.len());
        let v = crate::volume::load_volume(&rows[0].volume_path).unwrap();
        assert_eq!(v, p.volumes[0].1);
    }
}
