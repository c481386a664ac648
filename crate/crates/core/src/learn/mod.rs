//! Feature tables, correlation-based reduction and the three classifier
//! families.

pub mod forest;
pub mod gbdt;
mod model;
mod planted;
mod reduce;
pub mod svm;
mod table;
pub mod tree;

pub use forest::{ForestParams, Mtry};
pub use gbdt::GbdtParams;
pub use model::{
    select_by_importance, split_importance, ModelKind, ModelSpec, ModelState, Prediction,
    TrainedModel, MODEL_SCHEMA_VERSION,
};
pub use planted::PlantedTable;
pub use reduce::{pearson, reduce_features, write_drop_log, DropEntry, DropRule, ReductionParams};
pub use svm::SvmParams;
pub use table::FeatureTable;

#[cfg(test)]
mod tests;
