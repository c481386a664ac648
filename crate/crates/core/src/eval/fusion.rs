use crate::error::{Error, Result};

/// Positive only where both inputs are positive.
pub fn and_fuse(left: &[u8], right: &[u8]) -> Result<Vec<u8>> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    Ok(left
        .iter()
        .zip(right)
        .map(|(&a, &b)| (a == 1 && b == 1) as u8)
        .collect())
}

/// Fused ranking score: a subject is only as positive as its weaker side.
pub fn fuse_scores(left: &[f64], right: &[f64]) -> Result<Vec<f64>> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    Ok(left.iter().zip(right).map(|(a, b)| a.min(*b)).collect())
}
