use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("voxel count mismatch: dims require {expected}, found {found}")]
    VoxelCountMismatch { expected: usize, found: usize },
    #[error("invalid voxel value {value} at index {index}")]
    InvalidVoxel { index: usize, value: f64 },
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("ROI out of bounds: origin {origin:?} size {size:?} in volume {dims:?}")]
    RoiOutOfBounds {
        origin: [usize; 3],
        size: [usize; 3],
        dims: [usize; 3],
    },
    #[error("degenerate patch: no voxel above zero")]
    DegeneratePatch,
    #[error("zero variance")]
    ZeroVariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("insufficient nodes: k = {k} exceeds n = {n}")]
    InsufficientNodes { k: usize, n: usize },
    #[error("inconsistent ROI dims: expected {expected} nodes, found {found} for {subject}")]
    InconsistentRoiDims {
        expected: usize,
        found: usize,
        subject: String,
    },
    #[error("no texture direction fits a grid of dims {0:?}")]
    NoValidDirection([usize; 3]),
    #[error("no features survive reduction")]
    NoFeaturesSurvive,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("class {label} has {count} members (k = {k})")]
    ClassTooSmall { label: u8, count: usize, k: usize },
    #[error("training requires both classes: {0}")]
    SingleClass(String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("empty group: {0}")]
    EmptyGroup(String),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True when the inputs were well formed but the analysis itself could not
    /// produce a result (exit code 1 rather than 2).
    pub fn is_analysis_failure(&self) -> bool {
        matches!(
            self,
            Error::NoFeaturesSurvive
                | Error::SingleClass(_)
                | Error::ClassTooSmall { .. }
                | Error::EmptyGroup(_)
                | Error::DegeneratePatch
                | Error::ZeroVariance
                | Error::NoValidDirection(_)
                | Error::InsufficientNodes { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
