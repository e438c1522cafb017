//! The embedding-space distance used throughout the pipeline.

use crate::error::{Error, Result};

/// Squared Euclidean distance between two equal-dimension vectors.
///
/// This is the distance every association step works in: symmetric,
/// zero iff the vectors are equal, no normalization applied.
pub fn embed_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(sq_dist_unchecked(a, b))
}

/// Same as [`embed_distance`] but skips the dimension check; for hot loops
/// over already-validated tables.
pub(crate) fn sq_dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_for_identical() {
        assert_eq!(embed_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn unit_vector() {
        assert_eq!(embed_distance(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn hand_evaluated() {
        // (1-4)^2 + (2-6)^2 + (3-3)^2 = 9 + 16 + 0
        assert_eq!(
            embed_distance(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(),
            25.0
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(embed_distance(&[1.0], &[1.0, 2.0]).is_err());
    }
}
