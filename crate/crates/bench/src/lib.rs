//! Shared inputs for the benchmarks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use penred_core::Pencil;

/// Dense random pencil of the given size; seeds fix the instance so runs
/// compare like against like.
pub fn dense_pencil(n: usize, seed: u64) -> Pencil<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mat = || DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    Pencil::new(mat(), mat()).unwrap()
}

/// A pencil with an index-style profile: `E` rank deficient by a third.
pub fn deficient_pencil(n: usize, seed: u64) -> Pencil<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = (2 * n) / 3 + 1;
    let e = DMatrix::from_fn(n, k.min(n), |_, _| rng.random_range(-1.0..1.0))
        * DMatrix::from_fn(k.min(n), n, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    Pencil::new(e, a).unwrap()
}
