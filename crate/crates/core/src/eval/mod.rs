//! Fold plans, metrics, cross-validation, grid search, fusion and
//! explainability.

mod cohort;
mod cv;
mod folds;
mod fusion;
mod importance;
mod metrics;

pub use cohort::{cohort_graph_report, group_name, write_cohort_csv, Distribution};
pub use cv::{
    cross_validate, cross_validate_plan, grid_search, grid_search_plan, spec_for, CvReport,
    FeatureSelector, FoldResult, Grid, GridEntry, GridPoint, GridSearchResult, ParamValue,
    ReduceThenImportance, Selection,
};
pub use folds::{holdout_indices, holdout_split, stratified_kfold, FoldPlan};
pub use fusion::{and_fuse, fuse_scores};
pub use importance::{permutation_importance, write_importance_csv, Importance, DEFAULT_REPEATS};
pub use metrics::{accuracy, auroc, f1_score, false_positives, metrics, Scores};
