//! Bit-error-rate simulators.
//!
//! [`pbs_run`] tracks individual molecules as 3-D Gaussian random walks.
//! [`mc_run`] draws the received counts directly from their count-level
//! model. Both split the bits into fixed blocks, each with its own
//! generator stream, so results do not depend on the thread count.

mod mc;
mod pbs;

pub use mc::{mc_observations, mc_run};
pub use pbs::{pbs_observations, pbs_run, single_release_occupancy, PbsConfig, PbsMode, Retirement};

use crate::detector::DetectorSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bits per independently seeded block.
pub const BLOCK_BITS: usize = 4096;

const Z95: f64 = 1.959_963_984_540_054;

/// Error count with a 95 % Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub errors: u64,
    pub trials: u64,
    pub ber: f64,
    pub ci95: (f64, f64),
}

impl BerEstimate {
    pub fn new(errors: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(errors, trials, Z95);
        Self {
            errors,
            trials,
            ber: if trials == 0 { 0.0 } else { errors as f64 / trials as f64 },
            ci95: (lo, hi),
        }
    }

    /// Binomial standard error `sqrt(p (1 - p) / n)` at probability `p`.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // Exact at the edges; the formula is only correct up to rounding there.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Generator for one block: the master seed picks the key, the block index the stream.
pub(crate) fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Block layout `(index, bits in block)` for `n_bits`.
pub(crate) fn blocks(n_bits: usize) -> Vec<(usize, usize)> {
    (0..n_bits.div_ceil(BLOCK_BITS))
        .map(|b| (b, BLOCK_BITS.min(n_bits - b * BLOCK_BITS)))
        .collect()
}

/// Counts decision errors over `(bit, count)` observations.
pub(crate) fn count_errors(obs: &[(u8, u64)], detector: &DetectorSpec) -> u64 {
    obs.iter().filter(|(b, y)| detector.decide(*y) != *b).count() as u64
}
