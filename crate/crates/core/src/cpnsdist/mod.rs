//! Distribution of the number of CPNS molecules seen at the receiver.
//!
//! Events arrive as a homogeneous Poisson process of rate `lambda_e`; each
//! releases `Poisson(lambda_a)` molecules at distance `d_C`. Only events
//! within the last `k_C` slots (the window `K = k_C T`) are counted.

mod oracle;
mod rare_event;

pub use oracle::{exact_integral_pmf, subset_mixture, subset_mixture_pmf, ExactIntegralOptions, ExactIntegralPmf};
pub use rare_event::{interval_component_pmf, rare_event_pmf, RareEventMode, RareEventOptions};

use crate::channel::{hit_prob, hit_prob_integral, ChannelParams};
use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Parameters of the compound Poisson noise source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpnsParams {
    /// Link from the noise source to the receiver (`distance = d_C`).
    pub channel: ChannelParams,
    /// Event rate `lambda_e` in 1/s.
    pub event_rate: f64,
    /// Mean molecules per event `lambda_a`.
    pub amplitude: f64,
    /// Memory `k_C` in slots.
    pub memory_slots: usize,
    /// Slot length `T` in s.
    pub slot: f64,
}

impl CpnsParams {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        require_non_negative("event_rate", self.event_rate)?;
        require_non_negative("amplitude", self.amplitude)?;
        require_positive("slot", self.slot)?;
        if self.memory_slots == 0 {
            return Err(invalid("memory_slots", "must be at least 1"));
        }
        Ok(())
    }

    /// Observation window `K = k_C T`.
    pub fn window(&self) -> f64 {
        self.memory_slots as f64 * self.slot
    }

    /// `lambda_a p_C(age)`.
    pub fn rate_at_age(&self, age: f64) -> Result<f64> {
        Ok(self.amplitude * hit_prob(&self.channel, age)?)
    }
}

/// Mean CPNS count `lambda_e lambda_a ∫_0^K p_C(t) dt`.
pub fn cpns_mean(params: &CpnsParams) -> Result<f64> {
    params.validate()?;
    Ok(params.event_rate * params.amplitude * hit_prob_integral(&params.channel, params.window())?)
}

/// Discretization of the window into `count` sub-intervals of length `interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RareEventGrid {
    /// `T~`, adjusted so that it divides `K` exactly.
    pub interval: f64,
    /// `k~_C = K / T~`.
    pub count: usize,
}

/// `lambda_e T~` above which a warning is logged.
pub const RARE_EVENT_WARN: f64 = 0.1;

impl RareEventGrid {
    /// Picks the largest `T~ <= requested` that divides the window.
    pub fn new(params: &CpnsParams, requested: f64) -> Result<Self> {
        params.validate()?;
        require_positive("interval", requested)?;
        let window = params.window();
        let count = ((window / requested) * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0) as usize;
        let g = Self {
            interval: window / count as f64,
            count,
        };
        let q = g.event_probability(params);
        if q >= 1.0 {
            return Err(Error::RareEventViolated(q));
        }
        if q > RARE_EVENT_WARN {
            log::warn!("lambda_e * interval = {q:.3} exceeds {RARE_EVENT_WARN}; the rare-event approximation may be poor");
        }
        if (g.interval - requested).abs() > 1e-12 * requested {
            log::info!("interval adjusted from {requested} s to {} s to divide the window", g.interval);
        }
        Ok(g)
    }

    /// Probability `q = lambda_e T~` of one event in a sub-interval.
    pub fn event_probability(&self, params: &CpnsParams) -> f64 {
        params.event_rate * self.interval
    }

    /// `mu_i = lambda_a p_C(K - (i - 1) T~)` for `i = 1..=count`.
    pub fn interval_means(&self, params: &CpnsParams) -> Result<Vec<f64>> {
        let window = params.window();
        (0..self.count)
            .map(|i| params.rate_at_age(window - i as f64 * self.interval))
            .collect()
    }
}

/// Draws one CPNS count from the continuous-time model.
pub fn sample_cpns_count<R: Rng + ?Sized>(params: &CpnsParams, rng: &mut R) -> Result<u64> {
    let window = params.window();
    let n_events = poisson_sample(params.event_rate * window, rng);
    let mut total = 0;
    for _ in 0..n_events {
        let age = rng.random::<f64>() * window;
        total += poisson_sample(params.rate_at_age(age)?, rng);
    }
    Ok(total)
}

/// Poisson draw that accepts a zero mean.
pub(crate) fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn params() -> CpnsParams {
        CpnsParams {
            channel: ChannelParams::new(1.14e-9, 8e-6, 0.5e-6).unwrap(),
            event_rate: 2.0,
            amplitude: 1e5,
            memory_slots: 10,
            slot: 0.1,
        }
    }

    #[test]
    fn grid_divides_window() {
        let p = params();
        let g = RareEventGrid::new(&p, 0.003).unwrap();
        assert_eq!(g.count, 334);
        assert!((g.interval * g.count as f64 - p.window()).abs() < 1e-15);
        assert!(g.interval <= 0.003);
    }

    #[test]
    fn grid_rejects_non_rare() {
        let mut p = params();
        p.event_rate = 20.0;
        assert!(matches!(RareEventGrid::new(&p, 0.1), Err(Error::RareEventViolated(_))));
    }

    #[test]
    fn means_are_left_endpoints() {
        let p = params();
        let g = RareEventGrid::new(&p, 0.1).unwrap();
        let mu = g.interval_means(&p).unwrap();
        assert_eq!(mu.len(), 10);
        assert_eq!(mu[0], p.rate_at_age(p.window()).unwrap());
        assert_eq!(mu[9], p.rate_at_age(p.window() - 9.0 * g.interval).unwrap());
    }
}
