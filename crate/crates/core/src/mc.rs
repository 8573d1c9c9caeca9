//! Deterministic parallel Monte Carlo.
//!
//! Samples are drawn in fixed blocks of [`BLOCK`]; block `i` owns an RNG
//! seeded from `(seed, i)` only, and partial sums are reduced in block
//! order. The estimate is therefore a pure function of `(samples, seed)`
//! regardless of how rayon schedules the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Number of samples per block. Fixed: changing it changes results.
pub const BLOCK: usize = 1 << 14;

/// Mean / standard-error pair from a Monte Carlo run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// RNG for block `block` of the stream identified by `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(block.wrapping_add(1))))
}

/// Derive an unrelated stream seed, e.g. one per grid point.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(stream ^ 0xa076_1d64_78bd_642f)))
}

/// Mean of `f` over `samples` draws, with binomial-free standard error
/// `sd / sqrt(n)`. `f` is called once per sample with the block RNG.
pub fn mc_mean<F>(samples: usize, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    assert!(samples > 0, "mc_mean needs at least one sample");
    let n_blocks = samples.div_ceil(BLOCK);
    let partials: Vec<(f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(samples);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in lo..hi {
                let x = f(&mut rng);
                sum += x;
                sum_sq += x * x;
            }
            (sum, sum_sq)
        })
        .collect();
    // Block-ordered reduction keeps the result independent of scheduling.
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    }
}

/// Fraction of draws where `pred` holds, with binomial standard error.
pub fn mc_fraction<F>(samples: usize, seed: u64, pred: F) -> McEstimate
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    assert!(samples > 0, "mc_fraction needs at least one sample");
    let n_blocks = samples.div_ceil(BLOCK);
    let hits: Vec<u64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(samples);
            let mut h = 0u64;
            for _ in lo..hi {
                if pred(&mut rng) {
                    h += 1;
                }
            }
            h
        })
        .collect();
    let total: u64 = hits.iter().sum();
    let n = samples as f64;
    let p = total as f64 / n;
    McEstimate {
        mean: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples,
    }
}

/// Standard gaussian vector in dimension `d`.
pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}
