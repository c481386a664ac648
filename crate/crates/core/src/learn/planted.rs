//! Seeded feature tables with a known set of informative columns.

use rand::Rng;

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::rng::stream;

/// Layout of a planted-signal table.
///
/// A positive row is high on every planted column. Each negative row is low
/// on a non-empty subset of them, cycling through all such subsets, so no
/// planted column can be dropped without losing negatives that only it
/// identifies. Noise columns are uniform on [0, 1) and constant columns hold
/// their own index.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTable {
    pub n_rows: usize,
    pub n_planted: usize,
    pub n_noise: usize,
    pub n_constant: usize,
    /// Offset added to a planted column on the rows where it is high.
    pub shift: f64,
}

impl Default for PlantedTable {
    fn default() -> Self {
        Self {
            n_rows: 40,
            n_planted: 3,
            n_noise: 50,
            n_constant: 7,
            shift: 1.5,
        }
    }
}

impl PlantedTable {
    pub fn n_features(&self) -> usize {
        self.n_planted + self.n_noise + self.n_constant
    }

    pub fn planted_names(&self) -> Vec<String> {
        (0..self.n_planted).map(|j| format!("planted{j}")).collect()
    }

    pub fn noise_names(&self) -> Vec<String> {
        (0..self.n_noise).map(|j| format!("noise{j:02}")).collect()
    }

    /// Rows alternate negative, positive.
    pub fn generate(&self, seed: u64) -> Result<FeatureTable> {
        if self.n_rows < 2 || !(1..=16).contains(&self.n_planted) {
            return Err(Error::InvalidArgument(format!(
                "planted table needs at least 2 rows and 1 to 16 planted columns, got {} and {}",
                self.n_rows, self.n_planted
            )));
        }
        if !(self.shift.is_finite() && self.shift > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "shift must be positive, got {}",
                self.shift
            )));
        }
        let mut rng = stream(seed, &[]);
        let n_patterns = (1usize << self.n_planted) - 1;
        let labels: Vec<u8> = (0..self.n_rows).map(|i| (i % 2) as u8).collect();
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                let low = if label == 1 {
                    0
                } else {
                    (i / 2) % n_patterns + 1
                };
                let mut r: Vec<f64> = (0..self.n_planted)
                    .map(|j| {
                        let base: f64 = rng.random();
                        if low & (1 << j) == 0 {
                            base + self.shift
                        } else {
                            base
                        }
                    })
                    .collect();
                r.extend((0..self.n_noise).map(|_| rng.random::<f64>()));
                r.extend((0..self.n_constant).map(|j| j as f64));
                r
            })
            .collect();
        let mut names = self.planted_names();
        names.extend(self.noise_names());
        names.extend((0..self.n_constant).map(|j| format!("constant{j}")));
        let subjects = (0..self.n_rows).map(|i| format!("s{i:02}")).collect();
        FeatureTable::new(names, subjects, labels, rows)
    }
}
