//! Seeded, splittable randomness. Every parallel unit of work draws from its
//! own ChaCha stream, so results depend only on the seed and never on the
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Shots per independent RNG stream.
pub const SHOT_BLOCK: u64 = 1024;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Splits `shots` into fixed-size blocks, runs `f(rng, block_shots)` on each in
/// parallel, and returns the results in block order.
pub(crate) fn par_blocks<T, F>(shots: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let blocks = shots.div_ceil(SHOT_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let size = SHOT_BLOCK.min(shots - b * SHOT_BLOCK);
            f(&mut stream(seed, b), size)
        })
        .collect()
}

/// Inverse-CDF draw from a cumulative table whose last entry is the total mass.
pub(crate) fn draw_index(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

pub(crate) fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|&p| {
            acc += p.max(0.0);
            acc
        })
        .collect()
}
