//! High-rate regime: the CPNS count is approximated by `Poisson(M)` with
//! `M ~ N(k1, k2)`, the first two cumulants of the shot-noise rate.

use crate::cpnsdist::CpnsParams;
use crate::error::{invalid, require_positive, Error, Result};
use crate::pmf::{compensated_sum, Pmf};
use crate::quad::{integrate, QuadOptions};
use crate::special::{ln_parabolic_cylinder_neg_int, ln_poisson_pmf, ln_upper_incomplete_gamma, normal_cdf};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use crate::special::{
    hyp1f1 as confluent_1f1, parabolic_cylinder_d, regularized_q, upper_incomplete_gamma,
};

/// Mean and variance of the Gaussian rate `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub k1: f64,
    pub k2: f64,
}

/// `n`-th cumulant of the shot-noise rate, `lambda_e ∫_0^K (lambda_a p_C(t))^n dt`.
///
/// Closed form: with `x_n = n d^2 / (4 D K)`,
/// `k_n = G1 G2^n n^{1 - 3n/2} Γ(3n/2 - 1, x_n)`, `G1 = lambda_e d^2 / (4D)`,
/// `G2 = lambda_a V_R / (pi^{3/2} d^3)`.
pub fn cumulant(params: &CpnsParams, n: u32) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(invalid("n", "cumulant order must be at least 1"));
    }
    if params.event_rate == 0.0 || params.amplitude == 0.0 {
        return Ok(0.0);
    }
    let ch = &params.channel;
    let d2 = ch.distance * ch.distance;
    let nf = n as f64;
    let x = nf * d2 / (4.0 * ch.diffusion * params.window());
    let ln_g1 = (params.event_rate * d2 / (4.0 * ch.diffusion)).ln();
    let ln_g2 = (params.amplitude * ch.receiver_volume() / (PI.powf(1.5) * d2 * ch.distance)).ln();
    let ln_k = ln_g1 + nf * ln_g2 + (1.0 - 1.5 * nf) * nf.ln() + ln_upper_incomplete_gamma(1.5 * nf - 1.0, x)?;
    Ok(ln_k.exp())
}

/// First two cumulants.
pub fn cumulants(params: &CpnsParams) -> Result<Cumulants> {
    Ok(Cumulants {
        k1: cumulant(params, 1)?,
        k2: cumulant(params, 2)?,
    })
}

/// Default truncation point for [`highrate_pmf`].
pub fn default_k_max(c: Cumulants) -> usize {
    let m = c.k1.max(0.0) + 12.0 * c.k2.sqrt();
    (m + 12.0 * m.sqrt() + 30.0).ceil() as usize
}

/// pmf of `Poisson(M)`, `M ~ N(k1, k2)` restricted to `M >= 0`:
///
/// `ln p[k] = -ln(2 pi k2)/2 - k1^2/(2 k2) + z^2/4 + (k+1)/2 ln k2 + ln D_{-k-1}(z)`,
/// `z = sqrt(k2) (1 - k1/k2)`.
///
/// The Gaussian mass below zero is not redistributed, so the masses sum to
/// `Phi(k1 / sqrt(k2))`; the deficit is reported in `tail_bound`.
pub fn highrate_pmf(c: Cumulants, k_max: Option<usize>, tail_tol: f64) -> Result<Pmf> {
    require_positive("k2", c.k2)?;
    if !c.k1.is_finite() {
        return Err(invalid("k1", "must be finite"));
    }
    let k_max = k_max.unwrap_or_else(|| default_k_max(c));
    let (k1, k2) = (c.k1, c.k2);
    let z = (k2 - k1) / k2.sqrt();
    let base = -0.5 * (2.0 * PI * k2).ln() - k1 * k1 / (2.0 * k2) + 0.25 * z * z;
    let half_ln_k2 = 0.5 * k2.ln();
    let masses: Vec<f64> = ln_parabolic_cylinder_neg_int(z, k_max)
        .into_iter()
        .enumerate()
        .map(|(k, ln_d)| (base + (k as f64 + 1.0) * half_ln_k2 + ln_d).exp())
        .collect();
    let total = compensated_sum(masses.iter().copied());
    let positive_mass = normal_cdf(k1 / k2.sqrt());
    let truncated = positive_mass - total;
    if truncated > tail_tol {
        return Err(Error::TailTolerance {
            tail: truncated,
            tol: tail_tol,
            k_max,
        });
    }
    Ok(Pmf::from_parts(masses, (1.0 - total).max(0.0)))
}

/// Reference pmf by adaptive quadrature of
/// `∫_0^U Poisson(k; m) N(m; k1, k2) dm`, `U = k1 + 12 sqrt(k2)`.
///
/// Each mass is integrated separately to a relative tolerance, with
/// breakpoints around the integrand's peak.
pub fn highrate_pmf_quadrature(c: Cumulants, k_max: usize) -> Result<Pmf> {
    require_positive("k2", c.k2)?;
    let (k1, k2) = (c.k1, c.k2);
    let upper = k1 + 12.0 * k2.sqrt();
    if upper <= 0.0 {
        return Ok(Pmf::from_parts(vec![0.0; k_max + 1], 1.0));
    }
    let ln_norm = -0.5 * (2.0 * PI * k2).ln();
    let opts = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-300,
        max_panels: 2000,
    };
    let mut masses = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let kf = k as f64;
        let f = |m: f64| {
            if m <= 0.0 {
                return if k == 0 { (ln_norm - k1 * k1 / (2.0 * k2)).exp() } else { 0.0 };
            }
            (ln_poisson_pmf(k as u64, m) + ln_norm - (m - k1).powi(2) / (2.0 * k2)).exp()
        };
        // Stationary point of k ln m - m - (m - k1)^2 / (2 k2).
        let b = k2 - k1;
        let peak = 0.5 * (-b + (b * b + 4.0 * kf * k2).sqrt());
        let width = 1.0 / (kf / (peak * peak).max(1e-300) + 1.0 / k2).sqrt();
        let breaks: Vec<f64> = [-10.0, -3.0, 0.0, 3.0, 10.0].iter().map(|s| peak + s * width).collect();
        masses.push(integrate(f, 0.0, upper, &breaks, opts)?.0.max(0.0));
    }
    let total = compensated_sum(masses.iter().copied());
    Ok(Pmf::from_parts(masses, (1.0 - total).max(0.0)))
}

/// Gaussian approximation of the shot-noise rate.
pub type GaussianRate = Cumulants;

/// One draw of the shot-noise rate `M = sum_i lambda_a p_C(K - theta_i)`
/// over the events in the window.
pub fn sample_rate_m<R: Rng + ?Sized>(params: &CpnsParams, rng: &mut R) -> Result<f64> {
    let window = params.window();
    let n = crate::cpnsdist::poisson_sample(params.event_rate * window, rng);
    let mut m = 0.0;
    for _ in 0..n {
        m += params.rate_at_age(rng.random::<f64>() * window)?;
    }
    Ok(m)
}

/// One draw from `N(k1, k2)` (may be negative).
pub fn sample_gaussian_rate<R: Rng + ?Sized>(c: GaussianRate, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    c.k1 + c.k2.sqrt() * z
}
