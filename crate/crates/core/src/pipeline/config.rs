use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::Grid;
use crate::graph::{DEFAULT_BINS, DEFAULT_THRESHOLD};
use crate::learn::ModelKind;
use crate::radiomics::{FeatureFamilies, FilterKind, DEFAULT_DISCRETIZATION_BINS};
use crate::spectral::DEFAULT_K;
use crate::volume::{Interpolation, PhantomConfig, Region};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Pag,
    Radiomics,
}

impl PipelineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineKind::Pag => "pag",
            PipelineKind::Radiomics => "radiomics",
        }
    }
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pag" => Ok(PipelineKind::Pag),
            "radiomics" => Ok(PipelineKind::Radiomics),
            _ => Err(Error::Config(format!("unknown pipeline {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resampling {
    pub spacing: [f64; 3],
    pub interpolation: Interpolation,
}

/// Everything a run depends on. Parsed from `key = value` lines; `#` starts a
/// comment. Unset keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub pipeline: Option<PipelineKind>,
    pub regions: Vec<Region>,
    pub mi_bins: usize,
    pub edge_threshold: f64,
    pub k_eigen: usize,
    pub discretization_bins: u32,
    #[serde(serialize_with = "display_list")]
    pub filters: Vec<FilterKind>,
    pub families: FeatureFamilies,
    /// `None` picks random_forest for pag and gbdt for radiomics.
    pub model: Option<ModelKind>,
    /// `None` uses the default grid of the model kind.
    #[serde(serialize_with = "display_opt")]
    pub grid: Option<String>,
    pub cv_k: usize,
    pub test_fraction: f64,
    pub importance_repeats: usize,
    pub seed: u64,
    pub resampling: Option<Resampling>,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub phantom: PhantomConfig,
}

fn display_list<S: serde::Serializer>(
    v: &[FilterKind],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

fn display_opt<S: serde::Serializer>(
    v: &Option<String>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(g) => s.serialize_str(g),
        None => s.serialize_str("default"),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: None,
            regions: Region::ALL.to_vec(),
            mi_bins: DEFAULT_BINS,
            edge_threshold: DEFAULT_THRESHOLD,
            k_eigen: DEFAULT_K,
            discretization_bins: DEFAULT_DISCRETIZATION_BINS,
            filters: FilterKind::default_set(),
            families: FeatureFamilies::default(),
            model: None,
            grid: None,
            cv_k: 5,
            test_fraction: 0.2,
            importance_repeats: crate::eval::DEFAULT_REPEATS,
            seed: DEFAULT_SEED,
            resampling: None,
            threads: 0,
            output: None,
            phantom: PhantomConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn triple<T: FromStr + Copy + Default>(key: &str, v: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "{key}: expected three comma-separated values, got {v:?}"
        )));
    }
    let mut out = [T::default(); 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse(key, p)?;
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        let mut spacing = None;
        let mut interpolation = Interpolation::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), lineno + 1).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
            match key {
                "pipeline" => cfg.pipeline = Some(parse(key, v)?),
                "regions" => {
                    cfg.regions = v
                        .split(',')
                        .map(|r| r.trim().parse::<Region>())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::Config(format!("regions: {e}")))?
                }
                "mi_bins" => cfg.mi_bins = parse(key, v)?,
                "edge_threshold" => cfg.edge_threshold = parse(key, v)?,
                "k_eigen" => cfg.k_eigen = parse(key, v)?,
                "discretization_bins" => cfg.discretization_bins = parse(key, v)?,
                "filters" => {
                    cfg.filters = v
                        .split(',')
                        .map(str::parse::<FilterKind>)
                        .collect::<Result<_>>()
                        .map_err(|e| Error::Config(format!("filters: {e}")))?
                }
                "families" => {
                    cfg.families = FeatureFamilies::parse_list(v)
                        .map_err(|e| Error::Config(format!("families: {e}")))?
                }
                "model" => {
                    cfg.model = Some(
                        v.parse()
                            .map_err(|e| Error::Config(format!("model: {e}")))?,
                    )
                }
                "grid" => cfg.grid = (v != "default").then(|| v.to_string()),
                "cv_k" => cfg.cv_k = parse(key, v)?,
                "test_fraction" => cfg.test_fraction = parse(key, v)?,
                "importance_repeats" => cfg.importance_repeats = parse(key, v)?,
                "seed" => cfg.seed = parse(key, v)?,
                "threads" => cfg.threads = parse(key, v)?,
                "output" => cfg.output = Some(PathBuf::from(v)),
                "resample_spacing" => spacing = Some(triple::<f64>(key, v)?),
                "interpolation" => {
                    interpolation = v
                        .parse()
                        .map_err(|e| Error::Config(format!("interpolation: {e}")))?
                }
                "n_per_group" => cfg.phantom.n_per_group = parse(key, v)?,
                "roi_dims" => cfg.phantom.roi_dims = triple(key, v)?,
                "snr" => cfg.phantom.snr = parse(key, v)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key:?}",
                        lineno + 1
                    )))
                }
            }
        }
        if seen.contains_key("interpolation") && spacing.is_none() {
            return Err(Error::Config(
                "interpolation is set but resample_spacing is not".into(),
            ));
        }
        cfg.resampling = spacing.map(|spacing| Resampling {
            spacing,
            interpolation,
        });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.regions.is_empty() {
            return bad("regions must not be empty".into());
        }
        if self.mi_bins < 2 {
            return bad(format!("mi_bins must be at least 2, got {}", self.mi_bins));
        }
        if !(0.0..=1.0).contains(&self.edge_threshold) {
            return bad(format!(
                "edge_threshold must be in [0, 1], got {}",
                self.edge_threshold
            ));
        }
        if self.k_eigen == 0 {
            return bad("k_eigen must be at least 1".into());
        }
        if self.discretization_bins < 1 {
            return bad("discretization_bins must be at least 1".into());
        }
        if self.cv_k < 2 {
            return bad(format!("cv_k must be at least 2, got {}", self.cv_k));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            ));
        }
        if self.importance_repeats == 0 {
            return bad("importance_repeats must be at least 1".into());
        }
        if let Some(r) = &self.resampling {
            if r.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return bad(format!(
                    "resample_spacing must be positive, got {:?}",
                    r.spacing
                ));
            }
        }
        self.phantom
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut regions = self.regions.clone();
        regions.sort();
        regions.dedup();
        if regions.len() != self.regions.len() {
            return bad("regions contain duplicates".into());
        }
        if let Some(kind) = self.model {
            self.grid_for(kind)?;
        }
        Ok(())
    }

    pub fn model_for(&self, pipeline: PipelineKind) -> ModelKind {
        self.model.unwrap_or(match pipeline {
            PipelineKind::Pag => ModelKind::RandomForest,
            PipelineKind::Radiomics => ModelKind::Gbdt,
        })
    }

    pub fn grid_for(&self, kind: ModelKind) -> Result<Grid> {
        match &self.grid {
            Some(g) => Grid::parse(kind, g),
            None => Ok(Grid::default_for(kind)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        let c = RunConfig::parse_str(
            "pipeline = radiomics\n# note\nregions = bone, left_cistern\nmodel = svm_rbf\ngrid = c=1;gamma=0.1\n\
             filters = original,log_sigma:2\nresample_spacing = 1,1,2\nseed = 42 # trailing\nroi_dims = 4,4,8\n",
        )
        .unwrap();
        assert_eq!(c.pipeline, Some(PipelineKind::Radiomics));
        assert_eq!(c.regions, vec![Region::Bone, Region::LeftCistern]);
        assert_eq!(c.seed, 42);
        assert_eq!(c.filters.len(), 2);
        assert_eq!(c.phantom.roi_dims, [4, 4, 8]);
        assert_eq!(
            c.resampling.as_ref().unwrap().interpolation,
            Interpolation::CubicBspline
        );
        assert_eq!(c.grid_for(ModelKind::SvmRbf).unwrap().points().len(), 1);
        assert_eq!(c.model_for(PipelineKind::Pag), ModelKind::SvmRbf);
        assert_eq!(
            RunConfig::default().model_for(PipelineKind::Radiomics),
            ModelKind::Gbdt
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "seed = -1",
            "mi_bins = 1",
            "cv_k = 1",
            "seed = 1\nseed = 2",
            "no equals sign",
            "regions = nose",
            "model = svm_rbf\ngrid = depth=2",
            "interpolation = nearest",
            "roi_dims = 4,4",
            "n_per_group = 1",
            "edge_threshold = 1.5",
        ] {
            assert!(
                matches!(RunConfig::parse_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn report_echo_omits_paths_and_threads() {
        let c = RunConfig::parse_str("output = /tmp/x\nthreads = 3").unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert!(v.get("output").is_none() && v.get("threads").is_none());
        assert_eq!(v["grid"], "default");
    }
}
