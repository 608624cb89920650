//! Deterministic low-discrepancy point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b as u64) as f64;
        i /= b as u64;
        f *= inv;
    }
    r
}

/// `count` Halton points in the box `bounds`, shifted modulo one by a
/// seeded random offset (Cranley–Patterson rotation).
pub fn halton_box(bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(bounds.len() <= PRIMES.len(), "dimension too large for Halton bases");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = bounds.iter().map(|_| rng.random::<f64>()).collect();
    (0..count as u64)
        .map(|i| {
            bounds
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| {
                    let u = (radical_inverse(i + 1, PRIMES[d]) + shift[d]).fract();
                    lo + (hi - lo) * u
                })
                .collect()
        })
        .collect()
}
