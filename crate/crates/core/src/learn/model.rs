use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::forest::{train_forest, ForestParams, ForestState};
use super::gbdt::{train_gbdt, GbdtParams, GbdtState};
use super::svm::{train_svm, SvmParams, SvmState};
use super::FeatureTable;
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    SvmRbf,
    Gbdt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::RandomForest, ModelKind::SvmRbf, ModelKind::Gbdt];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::SvmRbf => "svm_rbf",
            ModelKind::Gbdt => "gbdt",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// Model family plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(ForestParams),
    SvmRbf(SvmParams),
    Gbdt(GbdtParams),
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestParams::default()),
            ModelKind::SvmRbf => ModelSpec::SvmRbf(SvmParams::default()),
            ModelKind::Gbdt => ModelSpec::Gbdt(GbdtParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::SvmRbf(_) => ModelKind::SvmRbf,
            ModelSpec::Gbdt(_) => ModelKind::Gbdt,
        }
    }

    pub fn train(&self, table: &FeatureTable, seed: u64) -> Result<TrainedModel> {
        let state = match self {
            ModelSpec::RandomForest(p) => ModelState::RandomForest(train_forest(table, p, seed)?),
            ModelSpec::SvmRbf(p) => ModelState::SvmRbf(train_svm(table, p)?),
            ModelSpec::Gbdt(p) => ModelState::Gbdt(train_gbdt(table, p)?),
        };
        Ok(TrainedModel {
            schema_version: MODEL_SCHEMA_VERSION,
            spec: self.clone(),
            seed,
            feature_names: table.feature_names.clone(),
            state,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelState {
    RandomForest(ForestState),
    SvmRbf(SvmState),
    Gbdt(GbdtState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub spec: ModelSpec,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub state: ModelState,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prediction {
    pub labels: Vec<u8>,
    /// Ranking scores: vote fraction, SVM decision value, or boosted probability.
    pub scores: Vec<f64>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn predict(&self, table: &FeatureTable) -> Result<Prediction> {
        if table.feature_names != self.feature_names {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features [{}...], table has {} [{}...]",
                self.feature_names.len(),
                self.feature_names.first().map(String::as_str).unwrap_or(""),
                table.feature_names.len(),
                table
                    .feature_names
                    .first()
                    .map(String::as_str)
                    .unwrap_or(""),
            )));
        }
        Ok(self.predict_rows(&table.rows))
    }

    /// Rows must follow `feature_names`.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Prediction {
        let scored: Vec<(u8, f64)> = crate::par::map_indexed(rows, |_, x| self.predict_one(x));
        Prediction {
            labels: scored.iter().map(|s| s.0).collect(),
            scores: scored.iter().map(|s| s.1).collect(),
        }
    }

    fn predict_one(&self, x: &[f64]) -> (u8, f64) {
        match &self.state {
            ModelState::RandomForest(f) => {
                let p = f.probability(x);
                ((p >= 0.5) as u8, p)
            }
            ModelState::SvmRbf(s) => {
                let d = s.decision(x);
                ((d > 0.0) as u8, d)
            }
            ModelState::Gbdt(g) => {
                let p = g.probability(x);
                ((p >= 0.5) as u8, p)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "model schema version {} (supported: {MODEL_SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Number of boosted-tree splits on each bound feature.
pub fn split_importance(model: &TrainedModel) -> Result<BTreeMap<String, usize>> {
    let ModelState::Gbdt(g) = &model.state else {
        return Err(Error::InvalidArgument(format!(
            "split importance needs a gbdt model, got {}",
            model.kind()
        )));
    };
    let mut counts: BTreeMap<String, usize> =
        model.feature_names.iter().map(|n| (n.clone(), 0)).collect();
    for f in g.trees.iter().flat_map(|t| t.split_features()) {
        *counts.get_mut(&model.feature_names[f]).unwrap() += 1;
    }
    Ok(counts)
}

/// Features with at least `threshold` splits, in the model's column order.
pub fn select_by_importance(model: &TrainedModel, threshold: usize) -> Result<Vec<String>> {
    let counts = split_importance(model)?;
    Ok(model
        .feature_names
        .iter()
        .filter(|n| counts[*n] >= threshold)
        .cloned()
        .collect())
}
