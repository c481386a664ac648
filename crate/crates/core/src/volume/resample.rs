use serde::{Deserialize, Serialize};

use super::{flat_index, Volume3D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    Trilinear,
    /// Interpolating uniform cubic B-spline: the samples are prefiltered into
    /// spline coefficients so the spline passes through every voxel.
    #[default]
    CubicBspline,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nearest" => Ok(Self::Nearest),
            "trilinear" => Ok(Self::Trilinear),
            "cubic_bspline" => Ok(Self::CubicBspline),
            other => Err(Error::InvalidArgument(format!(
                "unknown interpolation {other:?}"
            ))),
        }
    }
}

/// Resamples onto a grid with `target_spacing`, keeping the first voxel centre
/// fixed. Positions past the last voxel are clamped to the border.
pub fn resample(
    vol: &Volume3D,
    target_spacing: [f64; 3],
    method: Interpolation,
) -> Result<Volume3D> {
    if target_spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "target spacing must be positive, got {target_spacing:?}"
        )));
    }
    if target_spacing == vol.spacing() {
        return Ok(vol.clone());
    }
    resample_unchecked(vol, target_spacing, method)
}

pub(crate) fn resample_unchecked(
    vol: &Volume3D,
    target: [f64; 3],
    method: Interpolation,
) -> Result<Volume3D> {
    let dims = vol.dims();
    let spacing = vol.spacing();
    let mut out_dims = [0usize; 3];
    let mut step = [0f64; 3];
    for a in 0..3 {
        out_dims[a] = ((dims[a] as f64 * spacing[a] / target[a]).round() as usize).max(1);
        step[a] = target[a] / spacing[a];
    }
    let src: Vec<f64> = vol.voxels().iter().map(|&v| v as f64).collect();
    let coeffs = match method {
        Interpolation::CubicBspline => bspline_coefficients(&src, dims),
        _ => Vec::new(),
    };
    let mut out = Vec::with_capacity(out_dims.iter().product());
    for k in 0..out_dims[2] {
        for j in 0..out_dims[1] {
            for i in 0..out_dims[0] {
                let pos = [
                    clamp_pos(i as f64 * step[0], dims[0]),
                    clamp_pos(j as f64 * step[1], dims[1]),
                    clamp_pos(k as f64 * step[2], dims[2]),
                ];
                let v = match method {
                    Interpolation::Nearest => {
                        let p = pos.map(|p| (p + 0.5).floor() as usize);
                        let p = [
                            p[0].min(dims[0] - 1),
                            p[1].min(dims[1] - 1),
                            p[2].min(dims[2] - 1),
                        ];
                        src[flat_index(dims, p[0], p[1], p[2])]
                    }
                    Interpolation::Trilinear => trilinear(&src, dims, pos),
                    Interpolation::CubicBspline => bspline_eval(&coeffs, dims, pos),
                };
                // Cubic overshoot can dip below zero near sharp edges.
                out.push(v.max(0.0) as f32);
            }
        }
    }
    Volume3D::new(out_dims, target, out)
}

fn clamp_pos(p: f64, d: usize) -> f64 {
    p.clamp(0.0, (d - 1) as f64)
}

fn trilinear(src: &[f64], dims: [usize; 3], pos: [f64; 3]) -> f64 {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut t = [0f64; 3];
    for a in 0..3 {
        let f = pos[a].floor();
        lo[a] = f as usize;
        hi[a] = (lo[a] + 1).min(dims[a] - 1);
        t[a] = pos[a] - f;
    }
    let mut acc = 0.0;
    for (cz, wz) in [(lo[2], 1.0 - t[2]), (hi[2], t[2])] {
        for (cy, wy) in [(lo[1], 1.0 - t[1]), (hi[1], t[1])] {
            for (cx, wx) in [(lo[0], 1.0 - t[0]), (hi[0], t[0])] {
                let w = wx * wy * wz;
                if w != 0.0 {
                    acc += w * src[flat_index(dims, cx, cy, cz)];
                }
            }
        }
    }
    acc
}

const POLE: f64 = -0.267_949_192_431_122_7; // sqrt(3) - 2

/// In-place conversion of samples to cubic B-spline coefficients with
/// mirror-symmetric boundaries.
fn prefilter_line(c: &mut [f64]) {
    let n = c.len();
    if n < 2 {
        return;
    }
    let z = POLE;
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    for v in c.iter_mut() {
        *v *= gain;
    }
    c[0] = initial_causal(c, z);
    for k in 1..n {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

fn initial_causal(c: &[f64], z: f64) -> f64 {
    let n = c.len();
    let horizon = (f64::EPSILON.ln() / z.abs().ln()).ceil() as usize;
    if horizon < n {
        let mut zn = z;
        let mut sum = c[0];
        for &v in &c[1..horizon] {
            sum += zn * v;
            zn *= z;
        }
        sum
    } else {
        let iz = 1.0 / z;
        let mut zn = z;
        let mut z2n = z.powi(n as i32 - 1);
        let mut sum = c[0] + z2n * c[n - 1];
        z2n = z2n * z2n * iz;
        for &v in &c[1..n - 1] {
            sum += (zn + z2n) * v;
            zn *= z;
            z2n *= iz;
        }
        sum / (1.0 - zn * zn)
    }
}

fn bspline_coefficients(src: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let mut c = src.to_vec();
    let mut line = Vec::new();
    for axis in 0..3 {
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..dims[a] {
            for w in 0..dims[b] {
                let idx = |t: usize| {
                    let mut p = [0usize; 3];
                    p[axis] = t;
                    p[a] = u;
                    p[b] = w;
                    flat_index(dims, p[0], p[1], p[2])
                };
                line.clear();
                line.extend((0..dims[axis]).map(|t| c[idx(t)]));
                prefilter_line(&mut line);
                for (t, &v) in line.iter().enumerate() {
                    c[idx(t)] = v;
                }
            }
        }
    }
    c
}

fn bspline_weights(t: f64) -> [f64; 4] {
    // Sample offsets -1, 0, +1, +2 relative to floor(pos), t in [0, 1).
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0,
        (4.0 - 6.0 * s * s + 3.0 * s * s * s) / 6.0,
        t * t * t / 6.0,
    ]
}

fn mirror(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

fn bspline_eval(coeffs: &[f64], dims: [usize; 3], pos: [f64; 3]) -> f64 {
    let mut base = [0isize; 3];
    let mut w = [[0f64; 4]; 3];
    for a in 0..3 {
        let f = pos[a].floor();
        base[a] = f as isize;
        w[a] = bspline_weights(pos[a] - f);
    }
    let mut acc = 0.0;
    for (kz, wz) in w[2].iter().enumerate() {
        let z = mirror(base[2] + kz as isize - 1, dims[2]);
        for (ky, wy) in w[1].iter().enumerate() {
            let y = mirror(base[1] + ky as isize - 1, dims[1]);
            for (kx, wx) in w[0].iter().enumerate() {
                let x = mirror(base[0] + kx as isize - 1, dims[0]);
                acc += wx * wy * wz * coeffs[flat_index(dims, x, y, z)];
            }
        }
    }
    acc
}
