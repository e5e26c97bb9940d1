//! Count-level Monte Carlo: the received count is drawn directly as
//! `Poisson(sum_j b_j a_j)` plus an independent noise draw.

use super::{blocks, block_rng, count_errors, BerEstimate};
use crate::cpnsdist::{poisson_sample, sample_cpns_count};
use crate::detector::{DetectorSpec, NoiseModel, SystemConfig};
use crate::error::{invalid, Result};
use crate::highrate::sample_rate_m;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn noise_draw(cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> Result<u64> {
    Ok(match cfg.noise {
        NoiseModel::None => 0,
        NoiseModel::HomogeneousPoisson { mean } => poisson_sample(mean, rng),
        NoiseModel::RareEventApprox { .. } | NoiseModel::RareEventExact { .. } => sample_cpns_count(&cfg.cpns, rng)?,
        NoiseModel::HighRate => poisson_sample(sample_rate_m(&cfg.cpns, rng)?, rng),
    })
}

fn simulate_block(cfg: &SystemConfig, a: &[f64], seed: u64, block: usize, n_bits: usize) -> Result<Vec<(u8, u64)>> {
    let mut rng = block_rng(seed, block);
    let k_t = a.len() - 1;
    // Bits preceding the block give every symbol a full random history.
    let mut bits: Vec<u8> = (0..k_t + n_bits).map(|_| rng.random_range(0..2u8)).collect();
    bits.reverse();
    let mut out = Vec::with_capacity(n_bits);
    for i in (0..n_bits).rev() {
        let mean: f64 = bits[i..=i + k_t].iter().zip(a).filter(|(b, _)| **b == 1).map(|(_, a)| a).sum();
        let y = poisson_sample(mean, &mut rng) + noise_draw(cfg, &mut rng)?;
        out.push((bits[i], y));
    }
    Ok(out)
}

/// `(transmitted bit, received count)` for `n_bits` symbols.
pub fn mc_observations(cfg: &SystemConfig, n_bits: usize, seed: u64) -> Result<Vec<(u8, u64)>> {
    cfg.validate()?;
    if n_bits == 0 {
        return Err(invalid("n_bits", "must be at least 1"));
    }
    let a = cfg.interference_means()?;
    let parts: Vec<Result<Vec<(u8, u64)>>> = blocks(n_bits)
        .into_par_iter()
        .map(|(blk, n)| simulate_block(cfg, &a, seed, blk, n))
        .collect();
    let mut out = Vec::with_capacity(n_bits);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Monte Carlo BER estimate for a fixed detector.
pub fn mc_run(cfg: &SystemConfig, n_bits: usize, seed: u64, detector: &DetectorSpec) -> Result<BerEstimate> {
    let obs = mc_observations(cfg, n_bits, seed)?;
    Ok(BerEstimate::new(count_errors(&obs, detector), obs.len() as u64))
}
