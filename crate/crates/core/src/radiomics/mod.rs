//! Radiomics features: intensity filters, first-order statistics, GLCM and
//! GLRLM texture, and ROI-block shape. Names follow
//! `<filter>-<family>-<FeatureName>`, e.g. `wavelet-HHL-glrlm-RunPercentage`.

mod filters;
mod first_order;
mod shape;
mod texture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::RoiPatch;

pub use filters::{apply_filter, haar_subbands, FilterKind, Subband};
pub use first_order::{first_order_features, percentile, FIRST_ORDER_FEATURES};
pub use shape::{box_principal_variances, shape_features, SHAPE_FEATURES};
pub use texture::{
    directions, discretize, glcm_features, glcm_features_for, glcm_matrix, glrlm_features,
    glrlm_features_for, glrlm_matrix, GrayGrid, GLCM_FEATURES, GLRLM_FEATURES,
};

pub const DEFAULT_DISCRETIZATION_BINS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureFamilies {
    pub first_order: bool,
    pub glcm: bool,
    pub glrlm: bool,
    pub shape: bool,
}

impl Default for FeatureFamilies {
    fn default() -> Self {
        Self {
            first_order: true,
            glcm: true,
            glrlm: true,
            shape: true,
        }
    }
}

impl FeatureFamilies {
    pub fn none() -> Self {
        Self {
            first_order: false,
            glcm: false,
            glrlm: false,
            shape: false,
        }
    }

    /// Parses a comma list of `firstorder,glcm,glrlm,shape`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let mut f = Self::none();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "firstorder" => f.first_order = true,
                "glcm" => f.glcm = true,
                "glrlm" => f.glrlm = true,
                "shape" => f.shape = true,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown feature family {other:?}"
                    )))
                }
            }
        }
        Ok(f)
    }

    fn per_image(&self) -> usize {
        usize::from(self.first_order) * FIRST_ORDER_FEATURES.len()
            + usize::from(self.glcm) * GLCM_FEATURES.len()
            + usize::from(self.glrlm) * GLRLM_FEATURES.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiomicsConfig {
    pub filters: Vec<FilterKind>,
    pub families: FeatureFamilies,
    /// Gray levels for texture matrices, over each image's own range.
    pub n_bins: u32,
}

impl Default for RadiomicsConfig {
    fn default() -> Self {
        Self {
            filters: FilterKind::default_set(),
            families: FeatureFamilies::default(),
            n_bins: DEFAULT_DISCRETIZATION_BINS,
        }
    }
}

impl RadiomicsConfig {
    /// Number of filtered images (each wavelet subband counts once).
    pub fn image_count(&self) -> usize {
        self.filters.iter().map(FilterKind::output_count).sum()
    }

    /// Width of the feature row this configuration produces.
    pub fn feature_count(&self) -> usize {
        self.image_count() * self.families.per_image()
            + usize::from(self.families.shape) * SHAPE_FEATURES.len()
    }

    /// Provenance document listing the enabled filters and families.
    pub fn manifest_json(&self) -> serde_json::Value {
        serde_json::json!({
            "filters": self.filters.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "families": self.families,
            "discretization_bins": self.n_bins,
            "image_count": self.image_count(),
            "feature_count": self.feature_count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub label: u8,
    pub features: Vec<(String, f64)>,
}

/// Computes the configured feature row for one (already normalized) patch.
pub fn extract_all(patch: &RoiPatch, config: &RadiomicsConfig) -> Result<FeatureRow> {
    let mut features = Vec::with_capacity(config.feature_count());
    let fam = config.families;
    for kind in &config.filters {
        for (prefix, image) in apply_filter(patch, kind)? {
            if fam.first_order {
                for (k, v) in first_order_features(&image.voxels) {
                    features.push((format!("{prefix}-firstorder-{k}"), v));
                }
            }
            if fam.glcm || fam.glrlm {
                let levels = discretize(&image.voxels, config.n_bins)?;
                let grid = GrayGrid::new(image.dims, levels, config.n_bins)?;
                if fam.glcm {
                    for (k, v) in glcm_features(&grid)? {
                        features.push((format!("{prefix}-glcm-{k}"), v));
                    }
                }
                if fam.glrlm {
                    for (k, v) in glrlm_features(&grid)? {
                        features.push((format!("{prefix}-glrlm-{k}"), v));
                    }
                }
            }
        }
    }
    if fam.shape {
        for (k, v) in shape_features(patch.dims, patch.spacing) {
            features.push((format!("original-shape-{k}"), v));
        }
    }
    if let Some((k, v)) = features.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "feature {k} is not finite ({v}) for subject {:?}",
            patch.subject_id
        )));
    }
    Ok(FeatureRow {
        subject_id: patch.subject_id.clone(),
        label: patch.label,
        features,
    })
}
