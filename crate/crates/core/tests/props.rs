//! Property tests for the distance and constraint invariants.

use proptest::prelude::*;
use shotlink::embed_distance;

proptest! {
    #[test]
    fn distance_is_symmetric(
        a in prop::collection::vec(-1e3f64..1e3, 1..32),
        b in prop::collection::vec(-1e3f64..1e3, 1..32),
    ) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let ab = embed_distance(a, b).unwrap();
        let ba = embed_distance(b, a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn distance_zero_iff_equal(a in prop::collection::vec(-1e3f64..1e3, 1..16)) {
        prop_assert_eq!(embed_distance(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[0] += 1.0;
        prop_assert!(embed_distance(&a, &b).unwrap() > 0.0);
    }

    #[test]
    fn distance_matches_componentwise_reference(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let got = embed_distance(&a, &b).unwrap();
        // Reference: square of the L2 norm of (a - b), built up term by term
        // through the norm rather than the squared distance.
        let norm = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs().powi(2))
            .sum::<f64>()
            .sqrt();
        let want = norm * norm;
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
}
