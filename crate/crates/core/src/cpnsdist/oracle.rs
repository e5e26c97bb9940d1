//! Slow reference computations used to validate the rare-event engine.

use super::{CpnsParams, RareEventGrid};
use crate::error::{Error, Result};
use crate::pmf::{Pmf, PoissonMixture};
use crate::quad::{integrate_vec, QuadOptions};
use crate::special::{ln_poisson_pmf, regularized_p};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `k~_C` accepted by [`subset_mixture`].
pub const SUBSET_LIMIT: usize = 20;

/// Expands the rare-event model into one Poisson component per subset of
/// sub-intervals holding an event.
pub fn subset_mixture(params: &CpnsParams, grid: &RareEventGrid) -> Result<PoissonMixture> {
    if grid.count > SUBSET_LIMIT {
        return Err(Error::EnumerationTooLarge {
            what: "sub-interval subsets",
            size: grid.count,
            limit: SUBSET_LIMIT,
        });
    }
    let q = grid.event_probability(params);
    if q >= 1.0 {
        return Err(Error::RareEventViolated(q));
    }
    let mu = grid.interval_means(params)?;
    let n = grid.count;
    let components = (0u32..1 << n)
        .map(|mask| {
            let i = mask.count_ones() as i32;
            let w = (1.0 - q).powi(n as i32 - i) * q.powi(i);
            let m: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| mu[b]).sum();
            (w, m)
        })
        .collect();
    Ok(PoissonMixture { components })
}

/// [`subset_mixture`] evaluated as a pmf on `0..=k_max`.
pub fn subset_mixture_pmf(params: &CpnsParams, grid: &RareEventGrid, k_max: usize) -> Result<Pmf> {
    subset_mixture(params, grid)?.pmf(k_max)
}

#[derive(Debug, Clone, Copy)]
pub struct ExactIntegralOptions {
    /// Largest allowed `P(N_e > n_max)`.
    pub event_tail_tol: f64,
    /// Monte Carlo samples per event count `n >= 3`.
    pub mc_samples: usize,
    pub seed: u64,
    pub quad_rel_tol: f64,
}

impl Default for ExactIntegralOptions {
    fn default() -> Self {
        Self {
            event_tail_tol: 1e-10,
            mc_samples: 100_000,
            seed: 0,
            quad_rel_tol: 1e-9,
        }
    }
}

/// Output of [`exact_integral_pmf`].
///
/// Two readings of the event-time density are evaluated. The conditional
/// one treats the `n` event times as uniform order statistics on the
/// window (density `n!/K^n`). The other integrates
/// `lambda_e^n e^{-lambda_e theta_n}` over the ordered simplex as written,
/// built from exponential inter-event gaps; it is not normalized over the
/// window, so its total mass is reported alongside.
#[derive(Debug, Clone)]
pub struct ExactIntegralPmf {
    pub order_statistics: Pmf,
    pub gap_density_masses: Vec<f64>,
    pub gap_density_total: f64,
    /// Largest per-mass standard error contributed by the Monte Carlo terms.
    pub mc_std_error: f64,
}

/// Direct evaluation of the CPNS pmf by conditioning on the event count.
///
/// `n <= 2` use nested quadrature; larger counts use Monte Carlo.
pub fn exact_integral_pmf(params: &CpnsParams, k_max: usize, n_max: usize, opts: ExactIntegralOptions) -> Result<ExactIntegralPmf> {
    params.validate()?;
    let window = params.window();
    let lam = params.event_rate;
    let expected = lam * window;
    let event_tail = if expected == 0.0 {
        0.0
    } else {
        regularized_p(n_max as f64 + 1.0, expected)?
    };
    if event_tail > opts.event_tail_tol {
        return Err(Error::Infeasible(format!(
            "P(N_e > {n_max}) = {event_tail:e} exceeds {:e}; use rare_event_pmf for this regime",
            opts.event_tail_tol
        )));
    }
    let dim = k_max + 1;
    let weight = |n: usize| ln_poisson_pmf(n as u64, expected).exp();
    let mut order = vec![0.0; dim];
    let mut literal = vec![0.0; dim];
    let mut mc_se: f64 = 0.0;
    let quad = QuadOptions {
        rel_tol: opts.quad_rel_tol,
        abs_tol: 1e-300,
        max_panels: 4000,
    };
    let peak = window - params.channel.peak_time();
    let pts = if peak > 0.0 { vec![0.0, peak, window] } else { vec![0.0, window] };
    let fill = |mu: f64, out: &mut [f64]| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = ln_poisson_pmf(k as u64, mu).exp();
        }
    };
    let rate = |theta: f64| params.amplitude * params.channel.hit_prob_unchecked(window - theta);

    order[0] += weight(0);
    literal[0] += weight(0);

    if n_max >= 1 {
        let (v, _) = integrate_vec(
            |theta, out: &mut [f64]| {
                fill(rate(theta), &mut out[..dim]);
                let dens = lam * (-lam * theta).exp();
                for k in 0..dim {
                    out[dim + k] = out[k] * dens;
                    out[k] /= window;
                }
            },
            2 * dim,
            &pts,
            quad,
        )?;
        for k in 0..dim {
            order[k] += weight(1) * v[k];
            literal[k] += weight(1) * v[dim + k];
        }
    }

    if n_max >= 2 {
        let mut inner_err = None;
        let (v, _) = integrate_vec(
            |t2, out: &mut [f64]| {
                let m2 = rate(t2);
                let mut ipts: Vec<f64> = pts.iter().copied().filter(|&p| p < t2).collect();
                ipts.push(t2);
                let g = if ipts.len() < 2 {
                    Ok((vec![0.0; dim], 0.0))
                } else {
                    integrate_vec(|t1, o: &mut [f64]| fill(rate(t1) + m2, o), dim, &ipts, quad)
                };
                match g {
                    Ok((g, _)) => {
                        let dens = lam * lam * (-lam * t2).exp();
                        for k in 0..dim {
                            out[k] = 2.0 * g[k] / (window * window);
                            out[dim + k] = g[k] * dens;
                        }
                    }
                    Err(e) => {
                        inner_err.get_or_insert(e);
                        out.fill(0.0);
                    }
                }
            },
            2 * dim,
            &pts,
            quad,
        )?;
        if let Some(e) = inner_err {
            return Err(e);
        }
        for k in 0..dim {
            order[k] += weight(2) * v[k];
            literal[k] += weight(2) * v[dim + k];
        }
    }

    if n_max >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let samples = opts.mc_samples.max(1);
        let mut buf = vec![0.0; dim];
        for n in 3..=n_max {
            let w = weight(n);
            let volume = window.powi(n as i32) / crate::special::gamma(n as f64 + 1.0);
            let mut s1 = vec![0.0; dim];
            let mut s2 = vec![0.0; dim];
            let mut l1 = vec![0.0; dim];
            for _ in 0..samples {
                let mut mu = 0.0;
                let mut last: f64 = 0.0;
                for _ in 0..n {
                    let theta = rng.random::<f64>() * window;
                    last = last.max(theta);
                    mu += rate(theta);
                }
                fill(mu, &mut buf);
                let dens = lam.powi(n as i32) * (-lam * last).exp() * volume;
                for k in 0..dim {
                    s1[k] += buf[k];
                    s2[k] += buf[k] * buf[k];
                    l1[k] += buf[k] * dens;
                }
            }
            let ns = samples as f64;
            for k in 0..dim {
                let mean = s1[k] / ns;
                let var = (s2[k] / ns - mean * mean).max(0.0);
                mc_se = mc_se.max(w * (var / ns).sqrt());
                order[k] += w * mean;
                literal[k] += w * l1[k] / ns;
            }
        }
    }

    let total: f64 = order.iter().sum();
    let tail = (1.0 - total).max(0.0).max(event_tail);
    let gap_density_total = literal.iter().sum();
    Ok(ExactIntegralPmf {
        order_statistics: Pmf::from_parts(order, tail),
        gap_density_masses: literal,
        gap_density_total,
        mc_std_error: mc_se,
    })
}
