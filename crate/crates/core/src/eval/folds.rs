use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::FeatureTable;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    /// Sorted row indices of each test fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }
}

fn shuffled_class(labels: &[u8], class: u8, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
    idx.shuffle(&mut stream(seed, &[class as u64]));
    idx
}

/// Shuffles each class with its own seeded stream and deals it round-robin
/// into `k` folds; class 1 continues where class 0 stopped.
///
/// A class smaller than `k` is allowed (some folds then lack it); an absent
/// class or fewer than `k` rows is an error.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if labels.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} rows cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for class in [0u8, 1] {
        let idx = shuffled_class(labels, class, seed);
        if idx.is_empty() {
            return Err(Error::ClassTooSmall {
                label: class,
                count: idx.len(),
                k,
            });
        }
        for (j, &i) in idx.iter().enumerate() {
            folds[(offset + j) % k].push(i);
        }
        offset = (offset + idx.len()) % k;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(FoldPlan {
        k,
        seed,
        stratified: true,
        folds,
    })
}

/// Stratified (train, test) index split; each class contributes
/// `round(test_fraction * size)` test rows, at least 1 and at most size - 1.
pub fn holdout_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [0u8, 1] {
        let idx = shuffled_class(labels, class, seed);
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: class,
                count: idx.len(),
                k: 2,
            });
        }
        let n_test = ((test_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn holdout_split(
    table: &FeatureTable,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    let (train, test) = holdout_indices(&table.labels, test_fraction, seed)?;
    Ok((table.subset_rows(&train), table.subset_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(neg: usize, pos: usize) -> Vec<u8> {
        // Interleave so class membership is not positional.
        let mut v: Vec<u8> = std::iter::repeat_n(0, neg)
            .chain(std::iter::repeat_n(1, pos))
            .collect();
        v.shuffle(&mut stream(99, &[]));
        v
    }

    fn is_partition(plan: &FoldPlan, n: usize) -> bool {
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        all == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn ten_labels_k5() {
        let y = labels(6, 4);
        let plan = stratified_kfold(&y, 5, 1).unwrap();
        assert!(is_partition(&plan, 10));
        for f in &plan.folds {
            assert_eq!(f.len(), 2);
            let pos = f.iter().filter(|&&i| y[i] == 1).count() as f64;
            assert!((pos - 4.0 / 5.0).abs() < 1.0);
        }
        assert_eq!(plan, stratified_kfold(&y, 5, 1).unwrap());
    }

    #[test]
    fn cohort_shape() {
        let y = labels(20, 32);
        let plan = stratified_kfold(&y, 5, 3).unwrap();
        for f in &plan.folds {
            let pos = f.iter().filter(|&&i| y[i] == 1).count();
            assert!(pos == 6 || pos == 7);
        }
    }

    #[test]
    fn errors() {
        assert!(stratified_kfold(&labels(3, 3), 1, 0).is_err());
        assert!(matches!(
            stratified_kfold(&labels(10, 0), 5, 0),
            Err(Error::ClassTooSmall {
                label: 1,
                count: 0,
                k: 5
            })
        ));
        assert!(stratified_kfold(&labels(2, 2), 5, 0).is_err());
        assert!(holdout_indices(&labels(5, 5), 1.0, 0).is_err());
        assert!(holdout_indices(&labels(5, 1), 0.2, 0).is_err());
    }

    #[test]
    fn holdout_50() {
        let y = labels(30, 20);
        let (train, test) = holdout_indices(&y, 0.2, 4).unwrap();
        assert_eq!((train.len(), test.len()), (40, 10));
        assert_eq!(test.iter().filter(|&&i| y[i] == 0).count(), 6);
        assert_eq!(test.iter().filter(|&&i| y[i] == 1).count(), 4);
        assert_eq!(
            (train.clone(), test.clone()),
            holdout_indices(&y, 0.2, 4).unwrap()
        );
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_ne!(test, holdout_indices(&y, 0.2, 5).unwrap().1);
    }

    proptest! {
        #[test]
        fn plans_partition_and_stratify(neg in 1usize..30, pos in 1usize..30, k in 2usize..6, seed: u64) {
            prop_assume!(neg + pos >= k);
            let y = labels(neg, pos);
            let plan = stratified_kfold(&y, k, seed).unwrap();
            prop_assert!(is_partition(&plan, y.len()));
            let ideal = pos as f64 / k as f64;
            for (f, fold) in plan.folds.iter().enumerate() {
                let p = fold.iter().filter(|&&i| y[i] == 1).count() as f64;
                prop_assert!((p - ideal).abs() < 1.0);
                prop_assert!(fold.windows(2).all(|w| w[0] < w[1]));
                let train = plan.train_indices(f);
                prop_assert_eq!(train.len() + fold.len(), y.len());
            }
        }
    }
}
