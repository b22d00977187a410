//! Seeded random streams.
//!
//! Every restart and every surface cell draws from its own ChaCha stream,
//! derived only from the user seed and the job's coordinates, so results do
//! not depend on execution order or thread count.

use rand::distributions::{Distribution, Standard};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::types::{normalize_axis, Axis, StochasticMatrix};

pub type StreamRng = ChaCha8Rng;

/// Stream for restart `index` of a fit seeded with `seed`.
pub fn restart_stream(seed: u64, index: usize) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `(k, c)` cell of a surface sweep.
pub fn cell_seed(seed: u64, k: usize, c: usize) -> u64 {
    mix64(seed ^ mix64(((k as u64) << 32) | c as u64))
}

pub fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Standard.sample(rng)
}

/// Stochastic matrix whose vectors are normalized i.i.d. uniform(0, 1)
/// draws. Entries are drawn in row-major order.
pub fn random_stochastic<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    axis: Axis,
) -> StochasticMatrix {
    let mut m = Matrix::from_fn(rows, cols, |_, _| uniform01(rng));
    normalize_axis(&mut m, axis);
    StochasticMatrix::from_normalized(m, axis)
}
