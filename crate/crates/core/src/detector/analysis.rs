//! Likelihoods `p_Y[y | B_0 = b_0]` with previous bits averaged out.

use super::{NoiseModel, SystemConfig};
use crate::cpnsdist::{rare_event_pmf, RareEventGrid, RareEventMode, RareEventOptions};
use crate::error::{invalid, Error, Result};
use crate::highrate::{cumulants, default_k_max, highrate_pmf, Cumulants};
use crate::pmf::{poisson_upper_index, Pmf};
use rayon::prelude::*;

/// Largest `k_T` for which interference patterns are enumerated.
pub const PATTERN_LIMIT: usize = 20;

/// Truncation of the Poisson factors; small enough that far-tail
/// likelihood ratios stay meaningful.
const FINE_TOL: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Largest acceptable truncated noise mass.
    pub tail_tol: f64,
    pub rare_event: RareEventOptions,
    /// Lower bound on the likelihood support.
    pub min_k_max: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-10,
            rare_event: RareEventOptions::default(),
            min_k_max: 0,
        }
    }
}

/// Noise in a form the conditional pmfs can be built from.
#[derive(Debug, Clone)]
pub(super) enum Noise {
    Pmf(Pmf),
    Gaussian(Cumulants),
}

impl Noise {
    pub(super) fn build(cfg: &SystemConfig, opts: &AnalysisOptions) -> Result<Self> {
        let rare = |interval: f64, mode: RareEventMode| -> Result<Noise> {
            let grid = RareEventGrid::new(&cfg.cpns, interval)?;
            let ro = RareEventOptions {
                tail_tol: opts.tail_tol,
                ..opts.rare_event
            };
            Ok(Noise::Pmf(rare_event_pmf(&cfg.cpns, &grid, mode, ro)?))
        };
        match cfg.noise {
            NoiseModel::None => Ok(Noise::Pmf(Pmf::delta())),
            NoiseModel::HomogeneousPoisson { mean } => Ok(Noise::Pmf(Pmf::poisson_auto(mean, FINE_TOL)?)),
            NoiseModel::RareEventApprox { interval } => rare(interval, RareEventMode::Approx),
            NoiseModel::RareEventExact { interval } => rare(interval, RareEventMode::Exact),
            NoiseModel::HighRate => Ok(Noise::Gaussian(cumulants(&cfg.cpns)?)),
        }
    }

    fn to_pmf(&self, tail_tol: f64) -> Result<Pmf> {
        match self {
            Noise::Pmf(p) => Ok(p.clone()),
            Noise::Gaussian(c) => highrate_pmf(*c, None, tail_tol),
        }
    }

    /// Support large enough for noise plus a Poisson signal of mean `signal`.
    fn k_max(&self, signal: f64) -> Result<usize> {
        match self {
            Noise::Pmf(p) => Ok(p.k_max() + poisson_upper_index(signal, FINE_TOL)?),
            Noise::Gaussian(c) => Ok(default_k_max(Cumulants {
                k1: c.k1 + signal,
                k2: c.k2,
            })),
        }
    }

    /// Count pmf given a total transmitter mean `s`.
    pub(super) fn conditional(&self, s: f64, k_max: usize) -> Result<Pmf> {
        match self {
            Noise::Pmf(p) => Ok(p.convolve(&Pmf::poisson(s, k_max)?, k_max)),
            Noise::Gaussian(c) => highrate_pmf(
                Cumulants {
                    k1: c.k1 + s,
                    k2: c.k2,
                },
                Some(k_max),
                f64::INFINITY,
            ),
        }
    }
}

/// Noise pmf of the configured model.
pub fn noise_pmf(cfg: &SystemConfig, opts: &AnalysisOptions) -> Result<Pmf> {
    cfg.validate()?;
    Noise::build(cfg, opts)?.to_pmf(opts.tail_tol)
}

/// Pmf of the count given every bit in the memory, `bits[j] = b_j`.
pub fn conditional_signal_pmf(cfg: &SystemConfig, bits: &[u8], k_max: usize) -> Result<Pmf> {
    cfg.validate()?;
    if bits.len() != cfg.tx_memory_slots + 1 {
        return Err(invalid("bits", format!("expected {} bits, got {}", cfg.tx_memory_slots + 1, bits.len())));
    }
    let a = cfg.interference_means()?;
    let s = bits.iter().zip(&a).filter(|(b, _)| **b != 0).map(|(_, a)| a).sum();
    Noise::build(cfg, &AnalysisOptions::default())?.conditional(s, k_max)
}

/// Likelihood by explicit averaging over all `2^k_T` previous-bit patterns.
pub fn likelihood_enumerated(cfg: &SystemConfig, b0: u8, k_max: usize) -> Result<Pmf> {
    cfg.validate()?;
    let noise = Noise::build(cfg, &AnalysisOptions::default())?;
    enumerate_patterns(&noise, &cfg.interference_means()?, b0, k_max)
}

fn enumerate_patterns(noise: &Noise, a: &[f64], b0: u8, k_max: usize) -> Result<Pmf> {
    let k_t = a.len() - 1;
    if k_t > PATTERN_LIMIT {
        return Err(Error::EnumerationTooLarge {
            what: "interference patterns",
            size: k_t,
            limit: PATTERN_LIMIT,
        });
    }
    let base = if b0 != 0 { a[0] } else { 0.0 };
    let n = 1usize << k_t;
    let chunk = 64;
    // Fixed chunking and an in-order reduction keep the sum independent of scheduling.
    let partial: Vec<Result<(Vec<f64>, f64)>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; k_max + 1];
            let mut tail = 0.0;
            for mask in c * chunk..((c + 1) * chunk).min(n) {
                let s = base + (0..k_t).filter(|j| mask >> j & 1 == 1).map(|j| a[j + 1]).sum::<f64>();
                let p = noise.conditional(s, k_max)?;
                for (o, m) in acc.iter_mut().zip(p.masses()) {
                    *o += m;
                }
                tail += p.tail_bound();
            }
            Ok((acc, tail))
        })
        .collect();
    let mut masses = vec![0.0; k_max + 1];
    let mut tail = 0.0;
    for r in partial {
        let (acc, t) = r?;
        for (o, m) in masses.iter_mut().zip(&acc) {
            *o += m;
        }
        tail += t;
    }
    let w = 1.0 / n as f64;
    masses.iter_mut().for_each(|m| *m *= w);
    Ok(Pmf::from_parts(masses, tail * w))
}

/// Both likelihoods of one configuration, computed once.
///
/// For pmf-based noise the average over previous bits factorizes into a
/// convolution with `(delta + Poisson(a_j)) / 2` per slot, so any `k_T` is
/// handled. The high-rate model shifts the Gaussian mean by the
/// interference and is enumerated instead.
#[derive(Debug, Clone)]
pub struct LinkAnalysis {
    pub(super) cfg: SystemConfig,
    pub(super) interference: Vec<f64>,
    pub(super) noise: Noise,
    pub(super) l0: Pmf,
    pub(super) l1: Pmf,
}

impl LinkAnalysis {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        Self::with_options(cfg, &AnalysisOptions::default())
    }

    pub fn with_options(cfg: &SystemConfig, opts: &AnalysisOptions) -> Result<Self> {
        cfg.validate()?;
        let a = cfg.interference_means()?;
        let noise = Noise::build(cfg, opts)?;
        let k_max = noise.k_max(a.iter().sum())?.max(opts.min_k_max);
        let (l0, l1) = match &noise {
            Noise::Pmf(p) => {
                let mut l0 = p.clone();
                for &aj in &a[1..] {
                    if aj > 0.0 {
                        let f = Pmf::poisson_auto(aj, FINE_TOL)?.mix(&Pmf::delta(), 0.5);
                        l0 = l0.convolve(&f, k_max);
                    }
                }
                let l1 = l0.convolve(&Pmf::poisson_auto(a[0], FINE_TOL)?, k_max);
                (l0, l1)
            }
            Noise::Gaussian(_) => (
                enumerate_patterns(&noise, &a, 0, k_max)?,
                enumerate_patterns(&noise, &a, 1, k_max)?,
            ),
        };
        Ok(Self {
            cfg: *cfg,
            interference: a,
            noise,
            l0,
            l1,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    /// `a_0..a_{k_T}`.
    pub fn interference(&self) -> &[f64] {
        &self.interference
    }

    /// Noise pmf (computed on demand for the high-rate model).
    pub fn noise_pmf(&self, tail_tol: f64) -> Result<Pmf> {
        self.noise.to_pmf(tail_tol)
    }

    pub fn likelihood_pmf(&self, b0: u8) -> &Pmf {
        if b0 == 0 {
            &self.l0
        } else {
            &self.l1
        }
    }

    pub fn likelihood(&self, y: usize, b0: u8) -> f64 {
        self.likelihood_pmf(b0).mass(y)
    }

    /// Largest count with a stored likelihood.
    pub fn k_max(&self) -> usize {
        self.l0.k_max().max(self.l1.k_max())
    }
}

/// `p_Y[y | B_0 = b0]` as a pmf on `0..=k_max` (at least).
pub fn likelihood_pmf(cfg: &SystemConfig, b0: u8, k_max: usize) -> Result<Pmf> {
    let opts = AnalysisOptions {
        min_k_max: k_max,
        ..AnalysisOptions::default()
    };
    Ok(LinkAnalysis::with_options(cfg, &opts)?.likelihood_pmf(b0).clone())
}

/// `p_Y[y | B_0 = b0]`.
pub fn likelihood(cfg: &SystemConfig, y: usize, b0: u8, k_max: usize) -> Result<f64> {
    Ok(likelihood_pmf(cfg, b0, k_max.max(y))?.mass(y))
}
