use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::config::{PipelineKind, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{Distribution, FoldResult, GridEntry, GridPoint, Scores, Selection};
use crate::learn::{ModelKind, ModelSpec};
use crate::volume::Region;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub region: Region,
    pub n_subjects: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_features: usize,
    pub model: ModelKind,
    pub grid: Vec<GridEntry>,
    pub best_params: GridPoint,
    pub best_spec: ModelSpec,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub mean_auroc: Option<f64>,
    pub oof_false_positives: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_summary: Option<Vec<Distribution>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_selection: Option<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionReport {
    pub regions: [Region; 2],
    pub n_subjects: usize,
    /// Fused labels with min(left, right) as the ranking score.
    pub scores: Scores,
    pub false_positives_left: usize,
    pub false_positives_right: usize,
    pub false_positives_fused: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub pipeline: PipelineKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub seed: u64,
    pub config: RunConfig,
    pub n_manifest_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_selection_scope: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radiomics: Option<Value>,
    pub regions: Vec<RegionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionReport>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn fmt_opt(v: &Value) -> String {
    v.as_f64()
        .map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

/// Plain-text digest of a `report.json`.
pub fn render_report(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(s) if s == REPORT_SCHEMA_VERSION as u64 => {}
        other => {
            return Err(Error::format(
                path,
                format!("unsupported report schema version {other:?}"),
            ))
        }
    }
    let mut out = String::new();
    let pipeline = v["pipeline"].as_str().unwrap_or("?");
    let _ = writeln!(out, "pipeline {pipeline}, seed {}", v["seed"]);
    let _ = writeln!(
        out,
        "{:<16} {:>4} {:<14} {:>8} {:>8} {:>8}",
        "region", "n", "model", "acc", "f1", "auroc"
    );
    for r in v["regions"].as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "{:<16} {:>4} {:<14} {:>8} {:>8} {:>8}",
            r["region"].as_str().unwrap_or("?"),
            r["n_subjects"],
            r["model"].as_str().unwrap_or("?"),
            fmt_opt(&r["mean_accuracy"]),
            fmt_opt(&r["mean_f1"]),
            fmt_opt(&r["mean_auroc"]),
        );
        if let Some(h) = r.get("holdout") {
            let _ = writeln!(
                out,
                "{:<16} holdout acc {} f1 {} auroc {}",
                "",
                fmt_opt(&h["accuracy"]),
                fmt_opt(&h["f1"]),
                fmt_opt(&h["auroc"])
            );
        }
    }
    if let Some(f) = v.get("fusion") {
        let _ = writeln!(
            out,
            "fusion (AND) acc {} f1 {}; false positives left {} right {} fused {}",
            fmt_opt(&f["scores"]["accuracy"]),
            fmt_opt(&f["scores"]["f1"]),
            f["false_positives_left"],
            f["false_positives_right"],
            f["false_positives_fused"],
        );
    }
    Ok(out)
}
