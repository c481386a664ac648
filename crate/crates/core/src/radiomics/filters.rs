//! Intensity filters applied before feature extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{flat_index, RoiPatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Original,
    Exponential,
    Logarithm,
    Square,
    SquareRoot,
    Gradient,
    /// Laplacian of Gaussian with `sigma` in voxels.
    LogOfGaussian {
        sigma: f64,
    },
    /// Single-level 3D Haar transform; yields all eight subbands.
    Wavelet,
}

impl FilterKind {
    pub fn default_set() -> Vec<FilterKind> {
        vec![
            FilterKind::Original,
            FilterKind::Exponential,
            FilterKind::Logarithm,
            FilterKind::Square,
            FilterKind::SquareRoot,
            FilterKind::Gradient,
            FilterKind::LogOfGaussian { sigma: 1.0 },
            FilterKind::Wavelet,
        ]
    }

    /// Number of images this filter produces.
    pub fn output_count(&self) -> usize {
        match self {
            FilterKind::Wavelet => Subband::ALL.len(),
            _ => 1,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterKind::Original => f.write_str("original"),
            FilterKind::Exponential => f.write_str("exponential"),
            FilterKind::Logarithm => f.write_str("logarithm"),
            FilterKind::Square => f.write_str("square"),
            FilterKind::SquareRoot => f.write_str("square_root"),
            FilterKind::Gradient => f.write_str("gradient"),
            FilterKind::LogOfGaussian { sigma } => write!(f, "log_sigma:{sigma}"),
            FilterKind::Wavelet => f.write_str("wavelet"),
        }
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "original" => FilterKind::Original,
            "exponential" => FilterKind::Exponential,
            "logarithm" => FilterKind::Logarithm,
            "square" => FilterKind::Square,
            "square_root" => FilterKind::SquareRoot,
            "gradient" => FilterKind::Gradient,
            "wavelet" => FilterKind::Wavelet,
            _ => {
                let sigma = s
                    .strip_prefix("log_sigma:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown filter {s:?}")))?;
                FilterKind::LogOfGaussian { sigma }
            }
        })
    }
}

/// Haar subband; letter `i` is the pass applied along axis `i` (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subband {
    LLL,
    LLH,
    LHL,
    LHH,
    HLL,
    HLH,
    HHL,
    HHH,
}

impl Subband {
    pub const ALL: [Subband; 8] = [
        Subband::LLL,
        Subband::LLH,
        Subband::LHL,
        Subband::LHH,
        Subband::HLL,
        Subband::HLH,
        Subband::HHL,
        Subband::HHH,
    ];

    /// `true` for a high pass along each axis.
    pub fn passes(self) -> [bool; 3] {
        let i = self as usize;
        [i & 4 != 0, i & 2 != 0, i & 1 != 0]
    }

    pub fn name(self) -> String {
        self.passes()
            .iter()
            .map(|&h| if h { 'H' } else { 'L' })
            .collect()
    }
}

/// Applies `kind` and returns `(name prefix, image)` pairs; the prefix is the
/// `<filter>` part of feature names.
pub fn apply_filter(patch: &RoiPatch, kind: &FilterKind) -> Result<Vec<(String, RoiPatch)>> {
    let v = &patch.voxels;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let map =
        |f: &dyn Fn(f64) -> f64| patch.with_voxels(patch.dims, v.iter().map(|&x| f(x)).collect());
    let single = |name: &str, p: RoiPatch| Ok(vec![(name.to_string(), p)]);
    match *kind {
        FilterKind::Original => single("original", patch.clone()),
        FilterKind::Square => single("square", map(&|x| x * x)),
        FilterKind::SquareRoot => single("squareroot", map(&|x| (x - min).sqrt())),
        FilterKind::Logarithm => single("logarithm", map(&|x| (x - min + 1.0).ln())),
        FilterKind::Exponential => {
            let range = max - min;
            single(
                "exponential",
                map(&|x| {
                    if range > 0.0 {
                        ((x - min) / range).exp()
                    } else {
                        1.0
                    }
                }),
            )
        }
        FilterKind::Gradient => {
            require_min_dim(patch.dims, 2, "gradient")?;
            single(
                "gradient",
                patch.with_voxels(patch.dims, gradient_magnitude(v, patch.dims)),
            )
        }
        FilterKind::LogOfGaussian { sigma } => {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "LoG sigma must be > 0, got {sigma}"
                )));
            }
            let blurred = gaussian_blur(v, patch.dims, sigma);
            let name = format!("log-sigma-{sigma}");
            single(
                &name,
                patch.with_voxels(patch.dims, laplacian(&blurred, patch.dims)),
            )
        }
        FilterKind::Wavelet => {
            require_min_dim(patch.dims, 2, "wavelet")?;
            Ok(haar_subbands(v, patch.dims)
                .into_iter()
                .map(|(band, dims, data)| {
                    (
                        format!("wavelet-{}", band.name()),
                        patch.with_voxels(dims, data),
                    )
                })
                .collect())
        }
    }
}

fn require_min_dim(dims: [usize; 3], min: usize, what: &str) -> Result<()> {
    if dims.iter().any(|&d| d < min) {
        return Err(Error::InvalidArgument(format!(
            "{what} needs every axis >= {min}, got {dims:?}"
        )));
    }
    Ok(())
}

#[inline]
fn clamped(dims: [usize; 3], p: [isize; 3]) -> usize {
    let c = |v: isize, d: usize| v.clamp(0, d as isize - 1) as usize;
    flat_index(dims, c(p[0], dims[0]), c(p[1], dims[1]), c(p[2], dims[2]))
}

fn for_each_voxel(dims: [usize; 3], mut f: impl FnMut([isize; 3])) {
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                f([x as isize, y as isize, z as isize]);
            }
        }
    }
}

fn gradient_magnitude(v: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    for_each_voxel(dims, |p| {
        let mut sq = 0.0;
        for a in 0..3 {
            let mut fwd = p;
            let mut back = p;
            fwd[a] += 1;
            back[a] -= 1;
            let g = 0.5 * (v[clamped(dims, fwd)] - v[clamped(dims, back)]);
            sq += g * g;
        }
        out.push(sq.sqrt());
    });
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    for w in &mut k {
        *w /= s;
    }
    k
}

fn gaussian_blur(v: &[f64], dims: [usize; 3], sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let mut cur = v.to_vec();
    for axis in 0..3 {
        let mut next = Vec::with_capacity(cur.len());
        for_each_voxel(dims, |p| {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let mut q = p;
                q[axis] += k as isize - radius;
                acc += w * cur[clamped(dims, q)];
            }
            next.push(acc);
        });
        cur = next;
    }
    cur
}

fn laplacian(v: &[f64], dims: [usize; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    for_each_voxel(dims, |p| {
        let c = v[clamped(dims, p)];
        let mut acc = -6.0 * c;
        for a in 0..3 {
            for step in [-1isize, 1] {
                let mut q = p;
                q[a] += step;
                acc += v[clamped(dims, q)];
            }
        }
        out.push(acc);
    });
    out
}

/// One orthonormal Haar step along `axis`; odd lengths replicate the last
/// sample.
fn haar_axis(v: &[f64], dims: [usize; 3], axis: usize) -> ([usize; 3], Vec<f64>, Vec<f64>) {
    let mut out_dims = dims;
    out_dims[axis] = dims[axis].div_ceil(2);
    let n: usize = out_dims.iter().product();
    let mut low = Vec::with_capacity(n);
    let mut high = Vec::with_capacity(n);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for z in 0..out_dims[2] {
        for y in 0..out_dims[1] {
            for x in 0..out_dims[0] {
                let mut a = [x, y, z];
                a[axis] *= 2;
                let mut b = a;
                b[axis] = (a[axis] + 1).min(dims[axis] - 1);
                let va = v[flat_index(dims, a[0], a[1], a[2])];
                let vb = v[flat_index(dims, b[0], b[1], b[2])];
                low.push((va + vb) * r);
                high.push((va - vb) * r);
            }
        }
    }
    (out_dims, low, high)
}

pub fn haar_subbands(v: &[f64], dims: [usize; 3]) -> Vec<(Subband, [usize; 3], Vec<f64>)> {
    let mut stage: Vec<(Vec<bool>, [usize; 3], Vec<f64>)> = vec![(Vec::new(), dims, v.to_vec())];
    for axis in 0..3 {
        let mut next = Vec::with_capacity(stage.len() * 2);
        for (path, d, data) in stage {
            let (nd, lo, hi) = haar_axis(&data, d, axis);
            let mut pl = path.clone();
            pl.push(false);
            let mut ph = path;
            ph.push(true);
            next.push((pl, nd, lo));
            next.push((ph, nd, hi));
        }
        stage = next;
    }
    stage
        .into_iter()
        .map(|(path, d, data)| {
            let band = Subband::ALL
                .into_iter()
                .find(|b| b.passes().as_slice() == path.as_slice())
                .expect("eight passes cover all subbands");
            (band, d, data)
        })
        .collect()
}
