//! Seed plumbing. Every random draw in the crate comes from a ChaCha8 stream
//! selected by `(seed, stream)`, so parallel work is schedule-independent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from a parent seed and a label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix64(seed ^ mix64(label.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable hash of a real-valued column, used to seed per-column jitter.
pub fn hash_f64s(values: &[f64]) -> u64 {
    values
        .iter()
        .fold(0x243F_6A88_85A3_08D3u64, |acc, v| mix64(acc ^ v.to_bits()))
}

/// Assign `n` rows to `h` folds: shuffle with the seed, then deal round-robin.
pub fn fold_assignment(n: usize, h: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, 0));
    let mut folds = vec![0usize; n];
    for (pos, &row) in idx.iter().enumerate() {
        folds[row] = pos % h;
    }
    folds
}
