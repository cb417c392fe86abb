//! Deterministic low-discrepancy sampling.

use crate::geometry::Point;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

/// `n` Halton points in the box, skipping the first `offset` indices.
pub fn halton_box(bounds: &[(f64, f64)], n: usize, offset: u64) -> Vec<Point> {
    assert!(bounds.len() <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    (0..n as u64)
        .map(|i| {
            Point::from_iterator(
                bounds.len(),
                bounds
                    .iter()
                    .zip(PRIMES)
                    .map(|(&(lo, hi), b)| lo + (hi - lo) * radical_inverse(i + 1 + offset, b)),
            )
        })
        .collect()
}
