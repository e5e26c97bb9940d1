//! Symbol-by-symbol detection of on-off keyed bits in CPNS noise.
//!
//! Bit 1 releases `Poisson(N)` molecules at the transmitter, bit 0 releases
//! none. The receiver counts molecules at `t_s` into each slot. Previous
//! bits leak into the current count through `a_j = N p_T(jT + t_s)`.

mod analysis;
mod ber;

pub use analysis::{
    conditional_signal_pmf, likelihood, likelihood_enumerated, likelihood_pmf, noise_pmf, AnalysisOptions,
    LinkAnalysis, PATTERN_LIMIT,
};
pub use ber::{
    ber_std, decision_regions, log_concavity_check, ml_decide, optimal_threshold, ThresholdResult,
    ThresholdSearch,
};

use crate::channel::{channel_memory, hit_prob, ChannelParams};
use crate::cpnsdist::CpnsParams;
use crate::error::{invalid, require_non_negative, require_positive, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Noise model used by the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Homogeneous Poisson noise of fixed mean.
    HomogeneousPoisson { mean: f64 },
    /// Rare-event mixture with left-edge rates.
    RareEventApprox { interval: f64 },
    /// Rare-event mixture with rates averaged over each sub-interval.
    RareEventExact { interval: f64 },
    /// `Poisson(M)`, `M ~ N(k1, k2)`.
    HighRate,
}

/// Complete description of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmitter-to-receiver link (`distance = d_T`).
    pub transmitter: ChannelParams,
    /// Mean molecules released for bit 1.
    pub molecules: f64,
    /// Transmitter memory `k_T` in slots.
    pub tx_memory_slots: usize,
    /// Noise source; `cpns.slot` is the symbol slot `T`.
    pub cpns: CpnsParams,
    /// Sampling offset `t_s` within the slot.
    pub sample_time: f64,
    pub noise: NoiseModel,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.transmitter.validate()?;
        self.cpns.validate()?;
        require_non_negative("molecules", self.molecules)?;
        require_positive("sample_time", self.sample_time)?;
        if self.sample_time > self.cpns.slot {
            return Err(invalid("sample_time", "must not exceed the slot length"));
        }
        match self.noise {
            NoiseModel::HomogeneousPoisson { mean } => require_non_negative("noise mean", mean)?,
            NoiseModel::RareEventApprox { interval } | NoiseModel::RareEventExact { interval } => {
                require_positive("noise interval", interval)?
            }
            NoiseModel::None | NoiseModel::HighRate => {}
        }
        Ok(())
    }

    pub fn slot(&self) -> f64 {
        self.cpns.slot
    }

    /// `a_j = N p_T(jT + t_s)` for `j = 0..=k_T`.
    pub fn interference_means(&self) -> Result<Vec<f64>> {
        (0..=self.tx_memory_slots)
            .map(|j| Ok(self.molecules * hit_prob(&self.transmitter, j as f64 * self.slot() + self.sample_time)?))
            .collect()
    }
}

/// Sampling time at the peak of `p_T`, clipped to `(0, slot]`.
pub fn peak_sample_time(transmitter: &ChannelParams, slot: f64) -> f64 {
    transmitter.peak_time().min(slot)
}

/// Memory in slots from the reception-ratio rule.
pub fn memory_slots(ch: &ChannelParams, slot: f64, rho: f64) -> Result<usize> {
    Ok(channel_memory(ch, slot, rho)?.slots)
}

/// Decision regions on the count axis.
///
/// The region below `thresholds[0]` decides `first_region_bit`; each
/// threshold flips the decision. No thresholds means a constant decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub thresholds: Vec<usize>,
    pub first_region_bit: u8,
}

impl DetectorSpec {
    /// Single threshold: `y >= zeta` decides 1.
    pub fn single(zeta: usize) -> Self {
        Self {
            thresholds: vec![zeta],
            first_region_bit: 0,
        }
    }

    pub fn decide(&self, y: u64) -> u8 {
        let flips = self.thresholds.partition_point(|&z| z as u64 <= y);
        self.first_region_bit ^ (flips & 1) as u8
    }

    /// Number of regions.
    pub fn regions(&self) -> usize {
        self.thresholds.len() + 1
    }
}

/// BER as a function of a single threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    /// `(zeta, ber)` pairs.
    pub samples: Vec<(usize, f64)>,
}

impl BerCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "zeta,ber")?;
        for (z, b) in &self.samples {
            writeln!(w, "{z},{b:e}")?;
        }
        Ok(())
    }

    /// Sample with the smallest BER (first on ties).
    pub fn minimum(&self) -> Option<(usize, f64)> {
        self.samples
            .iter()
            .copied()
            .fold(None, |best, s| match best {
                Some((_, b)) if b <= s.1 => best,
                _ => Some(s),
            })
    }
}
