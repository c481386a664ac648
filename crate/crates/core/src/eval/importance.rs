use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::f1_score;
use crate::error::{Error, Result};
use crate::learn::{FeatureTable, TrainedModel};
use crate::par;
use crate::rng::stream;

pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Mean of (baseline F1 - F1 with the column permuted).
    pub mean_f1_drop: f64,
    pub std_f1_drop: f64,
}

/// Importances in the model's feature order.
pub fn permutation_importance(
    model: &TrainedModel,
    table: &FeatureTable,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    if n_repeats == 0 {
        return Err(Error::InvalidArgument(
            "n_repeats must be at least 1".into(),
        ));
    }
    let base = model.predict(table)?;
    let base_f1 = f1_score(&table.labels, &base.labels)?;
    let names = table.feature_names.clone();
    let out = par::map_indexed(&names, |j, name| -> Result<Importance> {
        let mut drops = Vec::with_capacity(n_repeats);
        let mut rows = table.rows.clone();
        let column = table.column(j);
        for r in 0..n_repeats {
            let mut perm = column.clone();
            perm.shuffle(&mut stream(seed, &[j as u64, r as u64]));
            for (row, v) in rows.iter_mut().zip(&perm) {
                row[j] = *v;
            }
            let pred = model.predict_rows(&rows);
            drops.push(base_f1 - f1_score(&table.labels, &pred.labels)?);
        }
        let n = drops.len() as f64;
        let mean = drops.iter().sum::<f64>() / n;
        let var = drops.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        Ok(Importance {
            feature: name.clone(),
            mean_f1_drop: mean,
            std_f1_drop: var.sqrt(),
        })
    });
    par::try_collect(out)
}

/// Columns `feature,mean_f1_drop,std_f1_drop`.
pub fn write_importance_csv(imp: &[Importance], path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "mean_f1_drop", "std_f1_drop"])?;
    for i in imp {
        w.write_record([
            i.feature.clone(),
            i.mean_f1_drop.to_string(),
            i.std_f1_drop.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
