use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f1: f64,
    /// Absent when `y_true` holds a single class.
    pub auroc: Option<f64>,
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    check_len(y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Binary F1 for class 1; 0 when there are no true positives to speak of.
pub fn f1_score(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    check_len(y_true.len(), y_pred.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 || tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

pub fn false_positives(y_true: &[u8], y_pred: &[u8]) -> Result<usize> {
    check_len(y_true.len(), y_pred.len())?;
    Ok(y_true
        .iter()
        .zip(y_pred)
        .filter(|&(&t, &p)| t == 0 && p == 1)
        .count())
}

/// Normalized Mann-Whitney U with midranks. `None` for a single-class `y_true`.
pub fn auroc(y_true: &[u8], scores: &[f64]) -> Result<Option<f64>> {
    check_len(y_true.len(), scores.len())?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| y_true[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(Some(u / (n_pos * n_neg) as f64))
}

pub fn metrics(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<Scores> {
    Ok(Scores {
        accuracy: accuracy(y_true, y_pred)?,
        f1: f1_score(y_true, y_pred)?,
        auroc: auroc(y_true, scores)?,
    })
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let y = [1, 0, 1, 0];
        let s = metrics(&y, &y, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            s,
            Scores {
                accuracy: 1.0,
                f1: 1.0,
                auroc: Some(1.0)
            }
        );
        assert_eq!(f1_score(&y, &[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(f1_score(&[0, 0], &[0, 0]).unwrap(), 0.0);
        assert_eq!(auroc(&y, &[0.9, 0.8, 0.4, 0.1]).unwrap(), Some(0.75));
        assert_eq!(auroc(&[1, 1], &[0.2, 0.3]).unwrap(), None);
        assert_eq!(auroc(&y, &[0.5; 4]).unwrap(), Some(0.5));
        assert!(metrics(&y, &[1], &[0.0]).is_err());
        assert!(auroc(&y, &[f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn f1_hand_value() {
        // tp 2, fp 1, fn 1.
        assert!((f1_score(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(false_positives(&[1, 0, 0], &[1, 1, 1]).unwrap(), 2);
    }

    fn pair_oracle(y: &[u8], s: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    proptest! {
        #[test]
        fn auroc_matches_pair_count(
            data in proptest::collection::vec((0u8..2, 0i32..6), 2..40),
        ) {
            let y: Vec<u8> = data.iter().map(|d| d.0).collect();
            let s: Vec<f64> = data.iter().map(|d| d.1 as f64 / 2.0).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            let a = auroc(&y, &s).unwrap().unwrap();
            prop_assert!((a - pair_oracle(&y, &s)).abs() < 1e-12);
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((a + auroc(&y, &neg).unwrap().unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn acc_f1_permutation_invariant(
            data in proptest::collection::vec((0u8..2, 0u8..2), 1..30),
            rot in 0usize..30,
        ) {
            let y: Vec<u8> = data.iter().map(|d| d.0).collect();
            let p: Vec<u8> = data.iter().map(|d| d.1).collect();
            let r = rot % y.len();
            let (mut y2, mut p2) = (y.clone(), p.clone());
            y2.rotate_left(r);
            p2.rotate_left(r);
            y2.reverse();
            p2.reverse();
            prop_assert_eq!(accuracy(&y, &p).unwrap(), accuracy(&y2, &p2).unwrap());
            prop_assert_eq!(f1_score(&y, &p).unwrap(), f1_score(&y2, &p2).unwrap());
        }
    }
}
