//! Correlation-based feature reduction.

use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_MIN: f64 = 0.01;
pub const DEFAULT_PAIR_MAX: f64 = 0.95;

/// Sample Pearson correlation; 0 when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs at least two samples".into(),
        ));
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropRule {
    TargetCorrelation,
    PairwiseCorrelation,
}

impl DropRule {
    pub fn as_str(self) -> &'static str {
        match self {
            DropRule::TargetCorrelation => "target_correlation",
            DropRule::PairwiseCorrelation => "pairwise_correlation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropEntry {
    pub feature: String,
    pub rule: DropRule,
    /// |corr| with the label, or with `partner` for the pairwise rule.
    pub statistic: f64,
    pub partner: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub target_min: f64,
    pub pair_max: f64,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            target_min: DEFAULT_TARGET_MIN,
            pair_max: DEFAULT_PAIR_MAX,
        }
    }
}

/// Drops features with |corr(feature, label)| below `target_min`, then scans
/// survivors by descending |target corr| (ties: name ascending) and drops any
/// feature whose |corr| with an already kept one exceeds `pair_max`.
///
/// The result keeps the input column order.
pub fn reduce_features(
    table: &FeatureTable,
    params: &ReductionParams,
) -> Result<(FeatureTable, Vec<DropEntry>)> {
    let label = table.label_values();
    let columns: Vec<Vec<f64>> = (0..table.n_features()).map(|j| table.column(j)).collect();
    let target: Vec<f64> = columns
        .iter()
        .map(|c| pearson(c, &label).map(f64::abs))
        .collect::<Result<_>>()?;
    let mut log = Vec::new();
    let mut candidates = Vec::new();
    for (j, &r) in target.iter().enumerate() {
        if r < params.target_min {
            log.push(DropEntry {
                feature: table.feature_names[j].clone(),
                rule: DropRule::TargetCorrelation,
                statistic: r,
                partner: None,
            });
        } else {
            candidates.push(j);
        }
    }
    candidates.sort_by(|&a, &b| {
        target[b]
            .total_cmp(&target[a])
            .then_with(|| table.feature_names[a].cmp(&table.feature_names[b]))
    });
    let mut kept: Vec<usize> = Vec::new();
    for j in candidates {
        let mut clash = None;
        for &k in &kept {
            let r = pearson(&columns[j], &columns[k])?.abs();
            if r > params.pair_max {
                clash = Some((k, r));
                break;
            }
        }
        match clash {
            Some((k, r)) => log.push(DropEntry {
                feature: table.feature_names[j].clone(),
                rule: DropRule::PairwiseCorrelation,
                statistic: r,
                partner: Some(table.feature_names[k].clone()),
            }),
            None => kept.push(j),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoFeaturesSurvive);
    }
    kept.sort_unstable();
    let names: Vec<String> = kept
        .iter()
        .map(|&j| table.feature_names[j].clone())
        .collect();
    Ok((table.select_features(&names)?, log))
}

/// Writes a drop log as `feature,rule,statistic`.
pub fn write_drop_log(log: &[DropEntry], path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "rule", "statistic"])?;
    for e in log {
        w.write_record([
            e.feature.as_str(),
            e.rule.as_str(),
            &e.statistic.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
