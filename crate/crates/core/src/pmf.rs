//! Truncated probability mass functions on the non-negative integers.

use crate::error::{invalid, Error, Result};
use crate::special::{ln_poisson_pmf, regularized_p, regularized_q};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Allowed deviation of `sum(masses) + tail_bound` from 1.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// A pmf on `{0, ..., k_max}` plus an upper bound on the mass it does not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    masses: Vec<f64>,
    tail_bound: f64,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl Pmf {
    /// Builds a pmf after checking every invariant.
    pub fn new(masses: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("masses", "must not be empty"));
        }
        if let Some((k, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m >= 0.0 && **m <= 1.0 + 1e-12))
        {
            return Err(invalid("masses", format!("mass at k = {k} is {m}")));
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(invalid("tail_bound", format!("must be >= 0, got {tail_bound}")));
        }
        let p = Self::from_parts(masses, tail_bound);
        let total = p.total() + tail_bound;
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(invalid(
                "masses",
                format!("masses plus tail bound sum to {total}, expected 1"),
            ));
        }
        Ok(p)
    }

    pub(crate) fn from_parts(masses: Vec<f64>, tail_bound: f64) -> Self {
        Self { masses, tail_bound }
    }

    /// Point mass at zero.
    pub fn delta() -> Self {
        Self::from_parts(vec![1.0], 0.0)
    }

    /// `Poisson(mean)` truncated at `k_max`; `tail_bound` is the exact upper tail.
    pub fn poisson(mean: f64, k_max: usize) -> Result<Self> {
        crate::error::require_non_negative("mean", mean)?;
        let masses = (0..=k_max as u64).map(|k| ln_poisson_pmf(k, mean).exp()).collect();
        let tail = if mean == 0.0 {
            0.0
        } else {
            regularized_p(k_max as f64 + 1.0, mean)?
        };
        Ok(Self::from_parts(masses, tail))
    }

    /// `Poisson(mean)` truncated where the upper tail drops below `tol`.
    pub fn poisson_auto(mean: f64, tol: f64) -> Result<Self> {
        Self::poisson(mean, poisson_upper_index(mean, tol)?)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }

    /// Mass at `k`, zero beyond the stored support.
    pub fn mass(&self, k: usize) -> f64 {
        self.masses.get(k).copied().unwrap_or(0.0)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn k_max(&self) -> usize {
        self.masses.len() - 1
    }

    /// Sum of the stored masses.
    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.masses.iter().enumerate().map(|(k, m)| k as f64 * m))
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        compensated_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(k, m)| (k as f64 - mu).powi(2) * m),
        )
    }

    /// Running sums `F[k] = sum_{j <= k} p[j]`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect()
    }

    /// `P(X < zeta)` over the stored masses.
    pub fn cdf_below(&self, zeta: usize) -> f64 {
        compensated_sum(self.masses.iter().take(zeta).copied())
    }

    /// Convolution truncated at `k_max`; dropped mass is added to the tail bound.
    pub fn convolve(&self, other: &Pmf, k_max: usize) -> Pmf {
        let n = (self.masses.len() + other.masses.len() - 1).min(k_max + 1);
        let mut out = vec![0.0; n];
        let mut dropped = 0.0;
        for (i, &a) in self.masses.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let fit = n.saturating_sub(i).min(other.masses.len());
            if fit == 0 {
                dropped += a * compensated_sum(other.masses.iter().copied());
                continue;
            }
            for (o, &b) in out[i..i + fit].iter_mut().zip(&other.masses[..fit]) {
                *o += a * b;
            }
            if fit < other.masses.len() {
                dropped += a * compensated_sum(other.masses[fit..].iter().copied());
            }
        }
        Pmf::from_parts(out, self.tail_bound + other.tail_bound + dropped)
    }

    /// Mixture `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Pmf, w: f64) -> Pmf {
        let n = self.masses.len().max(other.masses.len());
        let masses = (0..n)
            .map(|k| w * self.mass(k) + (1.0 - w) * other.mass(k))
            .collect();
        Pmf::from_parts(masses, w * self.tail_bound + (1.0 - w) * other.tail_bound)
    }

    /// Total-variation distance over the stored supports (tails ignored).
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let n = self.masses.len().max(other.masses.len());
        0.5 * compensated_sum((0..n).map(|k| (self.mass(k) - other.mass(k)).abs()))
    }

    /// Largest pointwise difference.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let n = self.masses.len().max(other.masses.len());
        (0..n).fold(0.0, |m, k| m.max((self.mass(k) - other.mass(k)).abs()))
    }

    /// Writes `k,mass` rows followed by a `# tail_bound=` trailer.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,mass")?;
        for (k, m) in self.masses.iter().enumerate() {
            writeln!(w, "{k},{m:e}")?;
        }
        writeln!(w, "# tail_bound={:e}", self.tail_bound)
    }

    /// Parses the format produced by [`Pmf::write_csv`]; other `#` lines are skipped.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Pmf> {
        let mut masses = Vec::new();
        let mut tail = None;
        let mut header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("tail_bound=") {
                    tail = Some(v.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {}: tail_bound: {e}", lineno + 1))
                    })?);
                }
                continue;
            }
            if !header {
                if line != "k,mass" {
                    return Err(Error::Parse(format!("line {}: expected header `k,mass`", lineno + 1)));
                }
                header = true;
                continue;
            }
            let (k, m) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `k,mass`", lineno + 1)))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if k != masses.len() {
                return Err(Error::Parse(format!("line {}: expected k = {}", lineno + 1, masses.len())));
            }
            masses.push(
                m.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
            );
        }
        let tail = tail.ok_or_else(|| Error::Parse("missing `# tail_bound=` trailer".into()))?;
        Pmf::new(masses, tail)
    }
}

/// Smallest `k` with `P(Poisson(mean) > k) <= tol`.
pub fn poisson_upper_index(mean: f64, tol: f64) -> Result<usize> {
    crate::error::require_non_negative("mean", mean)?;
    if mean == 0.0 {
        return Ok(0);
    }
    let mut k = (mean + 10.0 * mean.sqrt() + 10.0).ceil() as usize;
    while regularized_p(k as f64 + 1.0, mean)? > tol {
        k += (mean.sqrt() as usize).max(5);
    }
    // Step back down while the bound still holds.
    let step = (mean.sqrt() as usize / 4).max(1);
    while k >= step && regularized_p((k - step) as f64 + 1.0, mean)? <= tol {
        k -= step;
    }
    Ok(k)
}

/// Poisson masses on a window `[lo, hi]` that holds all but `~1e-25` of the mass.
#[derive(Debug, Clone)]
pub(crate) struct PoissonWindow {
    pub lo: usize,
    pub masses: Vec<f64>,
    /// Exact mass outside the window.
    pub outside: f64,
}

pub(crate) fn poisson_window_bounds(mean: f64) -> (usize, usize) {
    let s = mean.sqrt();
    let lo = (mean - 12.0 * s - 12.0).floor().max(0.0) as usize;
    let hi = (mean + 12.0 * s + 14.0).ceil() as usize;
    (lo, hi)
}

pub(crate) fn poisson_window(mean: f64) -> Result<PoissonWindow> {
    if mean == 0.0 {
        return Ok(PoissonWindow {
            lo: 0,
            masses: vec![1.0],
            outside: 0.0,
        });
    }
    let (lo, hi) = poisson_window_bounds(mean);
    let masses = (lo..=hi).map(|k| ln_poisson_pmf(k as u64, mean).exp()).collect();
    let mut outside = regularized_p(hi as f64 + 1.0, mean)?;
    if lo > 0 {
        outside += regularized_q(lo as f64, mean)?;
    }
    Ok(PoissonWindow { lo, masses, outside })
}

/// Finite mixture of Poisson distributions with non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonMixture {
    /// `(weight, mean)` pairs.
    pub components: Vec<(f64, f64)>,
}

impl PoissonMixture {
    pub fn weight_sum(&self) -> f64 {
        compensated_sum(self.components.iter().map(|c| c.0))
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.components.iter().map(|c| c.0 * c.1))
    }

    /// Mixture pmf truncated at `k_max`.
    pub fn pmf(&self, k_max: usize) -> Result<Pmf> {
        let mut masses = vec![0.0; k_max + 1];
        let mut tail = 0.0;
        for &(w, mu) in &self.components {
            if w == 0.0 {
                continue;
            }
            for (k, m) in masses.iter_mut().enumerate() {
                *m += w * ln_poisson_pmf(k as u64, mu).exp();
            }
            if mu > 0.0 {
                tail += w * regularized_p(k_max as f64 + 1.0, mu)?;
            }
        }
        Ok(Pmf::from_parts(masses, tail))
    }
}

/// Binomial weights `C(n, i) (1 - q)^(n - i) q^i` for `i = 0..=n`.
pub fn binomial_weights(n: usize, q: f64) -> Vec<f64> {
    // Recur away from the larger end so the starting term cannot underflow
    // for any n that matters here.
    let flip = q > 0.5;
    let (p, r) = if flip { (1.0 - q, q) } else { (q, 1.0 - q) };
    let mut w = Vec::with_capacity(n + 1);
    let mut t = (n as f64 * r.ln()).exp();
    let odds = p / r;
    for i in 0..=n {
        w.push(t);
        t *= (n - i) as f64 / (i + 1) as f64 * odds;
    }
    if flip {
        w.reverse();
    }
    w
}
