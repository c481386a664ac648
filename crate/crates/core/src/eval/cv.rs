use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, FoldPlan};
use super::metrics::{metrics, Scores};
use crate::error::{Error, Result};
use crate::learn::{
    select_by_importance, split_importance, DropEntry, FeatureTable, ForestParams, GbdtParams,
    ModelKind, ModelSpec, Mtry, ReductionParams, SvmParams,
};
use crate::par;
use crate::rng::derive_seed;

/// Features chosen inside one training fold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub features: Vec<String>,
    pub drops: Vec<DropEntry>,
    pub split_counts: BTreeMap<String, usize>,
}

/// Feature selection fitted on training rows only.
pub trait FeatureSelector: Sync {
    fn select(&self, train: &FeatureTable, seed: u64) -> Result<Selection>;
}

/// Pearson reduction followed by split-importance selection with a GBDT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceThenImportance {
    pub reduction: ReductionParams,
    pub importance_model: GbdtParams,
    pub min_splits: usize,
}

impl Default for ReduceThenImportance {
    fn default() -> Self {
        Self {
            reduction: ReductionParams::default(),
            importance_model: GbdtParams::default(),
            min_splits: 1,
        }
    }
}

impl FeatureSelector for ReduceThenImportance {
    fn select(&self, train: &FeatureTable, seed: u64) -> Result<Selection> {
        let (reduced, drops) = crate::learn::reduce_features(train, &self.reduction)?;
        let model = ModelSpec::Gbdt(self.importance_model.clone()).train(&reduced, seed)?;
        let features = select_by_importance(&model, self.min_splits)?;
        if features.is_empty() {
            return Err(Error::NoFeaturesSurvive);
        }
        Ok(Selection {
            features,
            drops,
            split_counts: split_importance(&model)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub scores: Scores,
    pub selection: Option<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    /// Mean over folds where AUROC is defined.
    pub mean_auroc: Option<f64>,
    /// Out-of-fold label and score for every table row.
    pub oof_labels: Vec<u8>,
    pub oof_scores: Vec<f64>,
}

fn model_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, &[1, fold as u64])
}

pub fn cross_validate(
    table: &FeatureTable,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let plan = stratified_kfold(&table.labels, k, seed)?;
    cross_validate_plan(table, spec, &plan, seed, None)
}

/// Trains a fresh model per fold; the selector, if any, sees only the
/// training rows of that fold.
pub fn cross_validate_plan(
    table: &FeatureTable,
    spec: &ModelSpec,
    plan: &FoldPlan,
    seed: u64,
    selector: Option<&dyn FeatureSelector>,
) -> Result<CvReport> {
    let results = par::map_indexed(
        &plan.folds,
        |f, test_idx| -> Result<(FoldResult, Vec<u8>, Vec<f64>)> {
            let mut train = table.subset_rows(&plan.train_indices(f));
            let mut test = table.subset_rows(test_idx);
            let fold_seed = model_seed(seed, f);
            let selection = match selector {
                Some(s) => {
                    let sel = s.select(&train, fold_seed)?;
                    train = train.select_features(&sel.features)?;
                    test = test.select_features(&sel.features)?;
                    Some(sel)
                }
                None => None,
            };
            let model = spec.train(&train, fold_seed)?;
            let pred = model.predict(&test)?;
            let scores = metrics(&test.labels, &pred.labels, &pred.scores)?;
            Ok((
                FoldResult {
                    fold: f,
                    n_train: train.n_rows(),
                    n_test: test.n_rows(),
                    scores,
                    selection,
                },
                pred.labels,
                pred.scores,
            ))
        },
    );
    let results = par::try_collect(results)?;
    let n_folds = results.len() as f64;
    let mut oof_labels = vec![0; table.n_rows()];
    let mut oof_scores = vec![0.0; table.n_rows()];
    let mut folds = Vec::new();
    for ((res, labels, scores), idx) in results.into_iter().zip(&plan.folds) {
        for (j, &i) in idx.iter().enumerate() {
            oof_labels[i] = labels[j];
            oof_scores[i] = scores[j];
        }
        folds.push(res);
    }
    let aurocs: Vec<f64> = folds.iter().filter_map(|f| f.scores.auroc).collect();
    Ok(CvReport {
        mean_accuracy: folds.iter().map(|f| f.scores.accuracy).sum::<f64>() / n_folds,
        mean_f1: folds.iter().map(|f| f.scores.f1).sum::<f64>() / n_folds,
        mean_auroc: (!aurocs.is_empty()).then(|| aurocs.iter().sum::<f64>() / aurocs.len() as f64),
        folds,
        oof_labels,
        oof_scores,
    })
}

/// Serialized as the string `"auto"` or a plain number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Auto,
    Num(f64),
}

impl Serialize for ParamValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ParamValue::Auto => s.serialize_str("auto"),
            ParamValue::Num(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ParamValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(ParamValue::Num(v)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl ParamValue {
    fn order(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (ParamValue::Auto, ParamValue::Auto) => std::cmp::Ordering::Equal,
            (ParamValue::Auto, _) => std::cmp::Ordering::Less,
            (_, ParamValue::Auto) => std::cmp::Ordering::Greater,
            (ParamValue::Num(a), ParamValue::Num(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Auto => f.write_str("auto"),
            ParamValue::Num(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ParamValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" | "none" => Ok(ParamValue::Auto),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(ParamValue::Num)
                .ok_or_else(|| Error::Config(format!("bad grid value {t:?}"))),
        }
    }
}

pub type GridPoint = BTreeMap<String, ParamValue>;

/// Cartesian grid over named hyperparameters of one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kind: ModelKind,
    pub axes: BTreeMap<String, Vec<ParamValue>>,
}

fn num(v: f64) -> ParamValue {
    ParamValue::Num(v)
}

impl Grid {
    pub fn default_for(kind: ModelKind) -> Self {
        let axes: Vec<(&str, Vec<ParamValue>)> = match kind {
            ModelKind::RandomForest => vec![
                ("n_trees", vec![num(100.0), num(300.0)]),
                ("max_depth", vec![ParamValue::Auto, num(8.0)]),
                ("mtry", vec![ParamValue::Auto]),
            ],
            ModelKind::SvmRbf => vec![
                ("c", vec![num(0.1), num(1.0), num(10.0)]),
                ("gamma", vec![num(0.01), num(0.1), num(1.0)]),
            ],
            ModelKind::Gbdt => vec![
                ("learning_rate", vec![num(0.01)]),
                ("n_trees", vec![num(1000.0)]),
                ("max_leaves", vec![num(31.0)]),
            ],
        };
        Self {
            kind,
            axes: axes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Rejects axes that are unknown to `kind` or hold invalid values.
    pub fn new(kind: ModelKind, axes: BTreeMap<String, Vec<ParamValue>>) -> Result<Self> {
        let g = Self { kind, axes };
        for p in g.points() {
            spec_for(kind, &p)?;
        }
        Ok(g)
    }

    /// Parses `name=v1|v2;name=v3`.
    pub fn parse(kind: ModelKind, s: &str) -> Result<Self> {
        let mut axes = BTreeMap::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, values) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid axis {part:?} lacks '='")))?;
            let values = values
                .split('|')
                .map(str::parse)
                .collect::<Result<Vec<ParamValue>>>()?;
            axes.insert(canonical_name(name.trim()), values);
        }
        Self::new(kind, axes)
    }

    /// All points in lexicographic order of (axis name, sorted values).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut points = vec![GridPoint::new()];
        for (name, values) in &self.axes {
            let mut values = values.clone();
            values.sort_by(|a, b| a.order(b));
            values.dedup_by(|a, b| a.order(b).is_eq());
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        if self.axes.values().any(Vec::is_empty) {
            return Vec::new();
        }
        points
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .axes
            .iter()
            .map(|(k, v)| {
                format!(
                    "{k}={}",
                    v.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join("|")
                )
            })
            .collect();
        f.write_str(&parts.join(";"))
    }
}

fn canonical_name(name: &str) -> String {
    if name == "C" {
        "c".into()
    } else {
        name.to_string()
    }
}

fn as_count(name: &str, v: ParamValue) -> Result<usize> {
    match v {
        ParamValue::Num(x) if x >= 0.0 && x.fract() == 0.0 => Ok(x as usize),
        _ => Err(Error::Config(format!(
            "{name} needs a non-negative integer, got {v}"
        ))),
    }
}

fn as_real(name: &str, v: ParamValue) -> Result<f64> {
    match v {
        ParamValue::Num(x) => Ok(x),
        ParamValue::Auto => Err(Error::Config(format!("{name} has no auto value"))),
    }
}

/// Model spec for one grid point; unspecified parameters keep their defaults.
pub fn spec_for(kind: ModelKind, point: &GridPoint) -> Result<ModelSpec> {
    let mut spec = ModelSpec::default_for(kind);
    for (name, &v) in point {
        let n = name.as_str();
        match &mut spec {
            ModelSpec::RandomForest(p) => apply_forest(p, n, v)?,
            ModelSpec::SvmRbf(p) => apply_svm(p, n, v)?,
            ModelSpec::Gbdt(p) => apply_gbdt(p, n, v)?,
        }
    }
    match &spec {
        ModelSpec::RandomForest(p) => p.validate()?,
        ModelSpec::SvmRbf(p) => p.validate()?,
        ModelSpec::Gbdt(p) => p.validate()?,
    }
    Ok(spec)
}

fn unknown(kind: ModelKind, name: &str) -> Error {
    Error::Config(format!("unknown {kind} hyperparameter {name:?}"))
}

fn apply_forest(p: &mut ForestParams, name: &str, v: ParamValue) -> Result<()> {
    match name {
        "n_trees" => p.n_trees = as_count(name, v)?,
        "max_depth" => {
            p.max_depth = match v {
                ParamValue::Auto => None,
                _ => Some(as_count(name, v)?),
            }
        }
        "mtry" => {
            p.mtry = match v {
                ParamValue::Auto => Mtry::Sqrt,
                _ => Mtry::Count(as_count(name, v)?),
            }
        }
        "bootstrap" => p.bootstrap = as_count(name, v)? != 0,
        "min_samples_split" => p.min_samples_split = as_count(name, v)?,
        _ => return Err(unknown(ModelKind::RandomForest, name)),
    }
    Ok(())
}

fn apply_svm(p: &mut SvmParams, name: &str, v: ParamValue) -> Result<()> {
    match name {
        "c" => p.c = as_real(name, v)?,
        "gamma" => p.gamma = as_real(name, v)?,
        "tol" => p.tol = as_real(name, v)?,
        "max_iter" => p.max_iter = as_count(name, v)?,
        _ => return Err(unknown(ModelKind::SvmRbf, name)),
    }
    Ok(())
}

fn apply_gbdt(p: &mut GbdtParams, name: &str, v: ParamValue) -> Result<()> {
    match name {
        "learning_rate" => p.learning_rate = as_real(name, v)?,
        "n_trees" => p.n_trees = as_count(name, v)?,
        "max_leaves" => p.max_leaves = as_count(name, v)?,
        "min_samples_leaf" => p.min_samples_leaf = as_count(name, v)?,
        "min_sum_hessian" => p.min_sum_hessian = as_real(name, v)?,
        "lambda_l2" => p.lambda_l2 = as_real(name, v)?,
        _ => return Err(unknown(ModelKind::Gbdt, name)),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub point: GridPoint,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_point: GridPoint,
    pub best_spec: ModelSpec,
    pub best_mean_f1: f64,
    pub best_report: CvReport,
    pub evaluated: Vec<GridEntry>,
}

pub fn grid_search(
    table: &FeatureTable,
    grid: &Grid,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    let plan = stratified_kfold(&table.labels, k, seed)?;
    grid_search_plan(table, grid, &plan, seed, None)
}

/// Every point is scored on the same folds with the same per-fold seeds; the
/// highest mean F1 wins, ties going to the earliest point in grid order.
pub fn grid_search_plan(
    table: &FeatureTable,
    grid: &Grid,
    plan: &FoldPlan,
    seed: u64,
    selector: Option<&dyn FeatureSelector>,
) -> Result<GridSearchResult> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let specs = points
        .iter()
        .map(|p| spec_for(grid.kind, p))
        .collect::<Result<Vec<_>>>()?;
    let reports = par::try_collect(par::map_indexed(&specs, |_, spec| {
        cross_validate_plan(table, spec, plan, seed, selector)
    }))?;
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.mean_f1 > reports[best].mean_f1 {
            best = i;
        }
    }
    let evaluated = points
        .iter()
        .zip(&reports)
        .map(|(p, r)| GridEntry {
            point: p.clone(),
            mean_f1: r.mean_f1,
        })
        .collect();
    Ok(GridSearchResult {
        best_point: points[best].clone(),
        best_spec: specs[best].clone(),
        best_mean_f1: reports[best].mean_f1,
        best_report: reports.into_iter().nth(best).unwrap(),
        evaluated,
    })
}
