//! Classification of labelled 3D image patches through two feature routes:
//! mutual-information pixel-array graphs with adjacency spectra, and
//! radiomics texture features. Both feed the same learners, cross-validated
//! evaluation and AND-fusion of paired region models.
//!
//! Every stochastic step takes an explicit seed; results do not depend on the
//! number of worker threads.

pub mod error;
pub mod eval;
pub mod graph;
pub mod learn;
pub mod pipeline;
pub mod radiomics;
pub mod rng;
pub mod spectral;
pub mod volume;

mod par;

pub use error::{Error, Result};
