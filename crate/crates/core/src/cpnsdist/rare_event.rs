//! Rare-event approximation: at most one event per sub-interval.
//!
//! The count is a sum of independent sub-interval contributions, each a
//! two-component mixture `(1 - q) delta_0 + q f_i`. The pmf is built by
//! convolving these factors one at a time.

use super::{CpnsParams, RareEventGrid};
use crate::error::{Error, Result};
use crate::pmf::{compensated_sum, poisson_window, poisson_window_bounds, Pmf};
use crate::quad::{integrate_vec, QuadOptions};
use crate::special::ln_poisson_pmf;
use serde::{Deserialize, Serialize};

/// How the per-interval contribution `f_i` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RareEventMode {
    /// `f_i = Poisson(mu_i)` with the rate frozen at the interval's left edge.
    Approx,
    /// `f_i` averages `Poisson(lambda_a p_C(age))` over the event time in the interval.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RareEventOptions {
    /// Truncation point; chosen from a Chernoff bound when `None`.
    pub k_max: Option<usize>,
    /// Largest acceptable truncated mass.
    pub tail_tol: f64,
    /// Relative tolerance of the quadrature in [`RareEventMode::Exact`].
    pub quad_rel_tol: f64,
}

impl Default for RareEventOptions {
    fn default() -> Self {
        Self {
            k_max: None,
            tail_tol: 1e-10,
            quad_rel_tol: 1e-10,
        }
    }
}

/// Per-interval factor `f_i` restricted to a window starting at `lo`.
struct Factor {
    lo: usize,
    masses: Vec<f64>,
    outside: f64,
}

fn factor(params: &CpnsParams, grid: &RareEventGrid, i: usize, mode: RareEventMode, quad_rel_tol: f64) -> Result<Factor> {
    let window = params.window();
    let age_hi = window - i as f64 * grid.interval;
    match mode {
        RareEventMode::Approx => {
            let w = poisson_window(params.rate_at_age(age_hi)?)?;
            Ok(Factor {
                lo: w.lo,
                masses: w.masses,
                outside: w.outside,
            })
        }
        RareEventMode::Exact => {
            let age_lo = (age_hi - grid.interval).max(0.0);
            let (mu_min, mu_max) = rate_range(params, age_lo, age_hi)?;
            let lo = poisson_window_bounds(mu_min).0;
            let hi = poisson_window_bounds(mu_max).1;
            let dim = hi - lo + 1;
            let mut pts = vec![age_lo];
            let peak = params.channel.peak_time();
            if peak > age_lo && peak < age_hi {
                pts.push(peak);
            }
            pts.push(age_hi);
            let mut err = None;
            let (mut masses, _) = integrate_vec(
                |age, out: &mut [f64]| match params.rate_at_age(age) {
                    Ok(mu) => {
                        for (j, o) in out.iter_mut().enumerate() {
                            *o = ln_poisson_pmf((lo + j) as u64, mu).exp();
                        }
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        out.fill(0.0);
                    }
                },
                dim,
                &pts,
                QuadOptions {
                    rel_tol: quad_rel_tol,
                    abs_tol: 1e-300,
                    max_panels: 4000,
                },
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            let span = age_hi - age_lo;
            masses.iter_mut().for_each(|m| *m = (*m / span).max(0.0));
            // Quadrature error is spread over the vector; renormalize so the
            // factor carries the same mass as the window bounds allow.
            let sum = compensated_sum(masses.iter().copied());
            let outside = poisson_window(mu_min)?.outside + poisson_window(mu_max)?.outside;
            let scale = (1.0 - outside) / sum;
            masses.iter_mut().for_each(|m| *m *= scale);
            Ok(Factor { lo, masses, outside })
        }
    }
}

/// Range of `lambda_a p_C(age)` for `age` in `[a, b]` (`p_C` is unimodal).
fn rate_range(params: &CpnsParams, a: f64, b: f64) -> Result<(f64, f64)> {
    let (fa, fb) = (params.rate_at_age(a)?, params.rate_at_age(b)?);
    let peak = params.channel.peak_time();
    let top = if peak > a && peak < b {
        params.rate_at_age(peak)?
    } else {
        fa.max(fb)
    };
    Ok((fa.min(fb), top))
}

/// Smallest `k` with a Chernoff bound `P(Y > k) <= tol`, given per-interval
/// upper rates `mu_hi`.
fn chernoff_k_max(q: f64, mu_hi: &[f64], tol: f64) -> usize {
    let ln_q = q.ln();
    let ln_1mq = (-q).ln_1p();
    let log_mgf = |s: f64| -> f64 {
        let es = s.exp_m1();
        mu_hi
            .iter()
            .map(|&m| {
                let x = ln_q + m * es;
                let (a, b) = if x > ln_1mq { (x, ln_1mq) } else { (ln_1mq, x) };
                a + (b - a).exp().ln_1p()
            })
            .sum()
    };
    let bound = |k: f64| -> f64 {
        // ln of min over s > 0 of e^{-s(k+1)} M(s); convex in s, golden-section search.
        let (mut a, mut b) = (1e-9f64, 50.0f64);
        let f = |s: f64| log_mgf(s) - s * (k + 1.0);
        let g = 0.618_033_988_749_894_9;
        let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..200 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
            if b - a < 1e-10 {
                break;
            }
        }
        fc.min(fd).min(0.0)
    };
    let ln_tol = tol.ln();
    let mean: f64 = q * mu_hi.iter().sum::<f64>();
    let mut lo = mean.floor() as usize;
    let mut hi = (mean + 10.0 * mean.sqrt() + 20.0).ceil() as usize;
    while bound(hi as f64) > ln_tol {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid as f64) > ln_tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Rare-event pmf of the CPNS count.
pub fn rare_event_pmf(params: &CpnsParams, grid: &RareEventGrid, mode: RareEventMode, opts: RareEventOptions) -> Result<Pmf> {
    let q = grid.event_probability(params);
    if q >= 1.0 {
        return Err(Error::RareEventViolated(q));
    }
    if q == 0.0 {
        return Ok(Pmf::delta());
    }
    let k_max = match opts.k_max {
        Some(k) => k,
        None => {
            let window = params.window();
            let mu_hi = (0..grid.count)
                .map(|i| {
                    let b = window - i as f64 * grid.interval;
                    match mode {
                        RareEventMode::Approx => params.rate_at_age(b),
                        RareEventMode::Exact => rate_range(params, (b - grid.interval).max(0.0), b).map(|r| r.1),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            chernoff_k_max(q, &mu_hi, opts.tail_tol)
        }
    };
    let mut acc = vec![0.0; k_max + 1];
    acc[0] = 1.0;
    let mut hi = 0usize;
    let mut tail = 0.0;
    let mut next = vec![0.0; k_max + 1];
    for i in 0..grid.count {
        let f = factor(params, grid, i, mode, opts.quad_rel_tol)?;
        tail += q * f.outside;
        let new_hi = (hi + f.lo + f.masses.len() - 1).min(k_max);
        for (n, a) in next[..=new_hi].iter_mut().zip(acc.iter()) {
            *n = (1.0 - q) * a;
        }
        next[hi + 1..=new_hi].fill(0.0);
        for (j, &a) in acc[..=hi].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let c = q * a;
            let start = j + f.lo;
            if start > k_max {
                tail += c * compensated_sum(f.masses.iter().copied());
                continue;
            }
            let fit = (k_max + 1 - start).min(f.masses.len());
            for (n, &m) in next[start..start + fit].iter_mut().zip(&f.masses[..fit]) {
                *n += c * m;
            }
            if fit < f.masses.len() {
                tail += c * compensated_sum(f.masses[fit..].iter().copied());
            }
        }
        hi = new_hi;
        std::mem::swap(&mut acc, &mut next);
    }
    if tail > opts.tail_tol {
        return Err(Error::TailTolerance {
            tail,
            tol: opts.tail_tol,
            k_max,
        });
    }
    acc.truncate(hi + 1);
    Ok(Pmf::from_parts(acc, tail))
}

/// One factor `(1 - q) delta_0 + q f_i` as a pmf (`i` is zero-based).
pub fn interval_component_pmf(params: &CpnsParams, grid: &RareEventGrid, i: usize, mode: RareEventMode) -> Result<Pmf> {
    if i >= grid.count {
        return Err(crate::error::invalid("i", format!("must be < {}", grid.count)));
    }
    let q = grid.event_probability(params);
    let f = factor(params, grid, i, mode, RareEventOptions::default().quad_rel_tol)?;
    let mut masses = vec![0.0; f.lo + f.masses.len()];
    masses[0] = 1.0 - q;
    for (j, m) in f.masses.iter().enumerate() {
        masses[f.lo + j] += q * m;
    }
    Ok(Pmf::from_parts(masses, q * f.outside))
}
