//! Error rates, decision regions and threshold search.

use super::analysis::{LinkAnalysis, Noise, PATTERN_LIMIT};
use super::{AnalysisOptions, BerCurve, DetectorSpec, NoiseModel, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::highrate::{highrate_pmf, Cumulants};
use crate::pmf::{compensated_sum, Pmf};
use crate::special::regularized_q;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSearch {
    Bisection,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub zeta: usize,
    pub ber: f64,
    /// Search actually used; bisection falls back to grid when BER is not unimodal.
    pub search: ThresholdSearch,
    pub unimodal: bool,
}

impl LinkAnalysis {
    /// `BER(y + 1) - BER(y) = (p[y|1] - p[y|0]) / 2`.
    pub fn ber_step(&self, y: usize) -> f64 {
        0.5 * (self.l1.mass(y) - self.l0.mass(y))
    }

    /// Single-threshold BER, `(1 - P(Y < zeta | 0) + P(Y < zeta | 1)) / 2`.
    pub fn ber(&self, zeta: usize) -> f64 {
        let f0: f64 = self.l0.masses().iter().take(zeta).sum();
        let f1: f64 = self.l1.masses().iter().take(zeta).sum();
        0.5 * (1.0 - f0 + f1)
    }

    /// BER for every `zeta` in `1..=zeta_max`.
    pub fn ber_curve(&self, zeta_max: usize) -> BerCurve {
        let (mut f0, mut f1) = (0.0, 0.0);
        let mut samples = Vec::with_capacity(zeta_max);
        for zeta in 1..=zeta_max {
            f0 += self.l0.mass(zeta - 1);
            f1 += self.l1.mass(zeta - 1);
            samples.push((zeta, 0.5 * (1.0 - f0 + f1)));
        }
        BerCurve { samples }
    }

    /// ML decision; ties decide 0.
    pub fn decide(&self, y: usize) -> u8 {
        u8::from(self.l1.mass(y) > self.l0.mass(y))
    }

    /// Regions of the ML detector on `0..=y_max`. Counts where both
    /// likelihoods vanish keep the previous decision.
    pub fn decision_regions(&self, y_max: usize) -> DetectorSpec {
        let mut thresholds = Vec::new();
        let mut first = None;
        let mut current = 0u8;
        for y in 0..=y_max {
            if self.l0.mass(y) == 0.0 && self.l1.mass(y) == 0.0 {
                continue;
            }
            let d = self.decide(y);
            match first {
                None => {
                    first = Some(d);
                    current = d;
                }
                Some(_) if d != current => {
                    thresholds.push(y);
                    current = d;
                }
                Some(_) => {}
            }
        }
        DetectorSpec {
            thresholds,
            first_region_bit: first.unwrap_or(0),
        }
    }

    /// BER of an arbitrary detector; counts beyond the stored support take
    /// the decision of the last region.
    pub fn ber_of(&self, spec: &DetectorSpec) -> f64 {
        let k_max = self.k_max();
        let inside = compensated_sum((0..=k_max).map(|y| {
            if spec.decide(y as u64) == 1 {
                self.l0.mass(y)
            } else {
                self.l1.mass(y)
            }
        }));
        let beyond = if spec.decide(k_max as u64 + 1) == 1 {
            1.0 - self.l0.total()
        } else {
            1.0 - self.l1.total()
        };
        0.5 * (inside + beyond)
    }

    /// BER of the full ML (multiple-threshold) detector.
    pub fn mtd_ber(&self) -> f64 {
        self.ber_of(&self.decision_regions(self.k_max()))
    }

    /// Counts where at least one likelihood is non-zero.
    fn support(&self) -> Option<(usize, usize)> {
        let nz = |y: usize| self.l0.mass(y) > 0.0 || self.l1.mass(y) > 0.0;
        let k_max = self.k_max();
        let lo = (0..=k_max).find(|&y| nz(y))?;
        let hi = (lo..=k_max).rev().find(|&y| nz(y))?;
        Some((lo, hi))
    }

    /// Discrete unimodality of `BER(zeta)`: on the support the step sign
    /// never goes from positive back to non-positive.
    pub fn ber_is_unimodal(&self) -> bool {
        let Some((lo, hi)) = self.support() else {
            return true;
        };
        let mut rising = false;
        for y in lo..=hi {
            let up = self.ber_step(y) > 0.0;
            if rising && !up {
                return false;
            }
            rising |= up;
        }
        true
    }

    pub fn optimal_threshold(&self, search: ThresholdSearch) -> ThresholdResult {
        let unimodal = self.ber_is_unimodal();
        if search == ThresholdSearch::Bisection && unimodal {
            let zeta = match self.support() {
                None => 1,
                Some((lo, hi)) => {
                    // First count in [lo, hi] with a positive step, or hi + 1.
                    let (mut a, mut b) = (lo, hi + 1);
                    while a < b {
                        let mid = a + (b - a) / 2;
                        if self.ber_step(mid) > 0.0 {
                            b = mid;
                        } else {
                            a = mid + 1;
                        }
                    }
                    if a == lo {
                        1
                    } else {
                        a
                    }
                }
            };
            return ThresholdResult {
                zeta,
                ber: self.ber(zeta),
                search: ThresholdSearch::Bisection,
                unimodal,
            };
        }
        if search == ThresholdSearch::Bisection {
            log::warn!("BER is not unimodal in the threshold; falling back to grid search");
        }
        let (zeta, ber) = self
            .ber_curve(self.k_max() + 1)
            .minimum()
            .expect("curve has at least one sample");
        ThresholdResult {
            zeta,
            ber,
            search: ThresholdSearch::Grid,
            unimodal,
        }
    }
}

/// ML decision for count `y`.
pub fn ml_decide(cfg: &SystemConfig, y: usize) -> Result<u8> {
    let opts = AnalysisOptions {
        min_k_max: y,
        ..AnalysisOptions::default()
    };
    Ok(LinkAnalysis::with_options(cfg, &opts)?.decide(y))
}

/// Decision regions of the ML detector on `0..=y_max` (default: the
/// likelihood support).
pub fn decision_regions(cfg: &SystemConfig, y_max: Option<usize>) -> Result<DetectorSpec> {
    let opts = AnalysisOptions {
        min_k_max: y_max.unwrap_or(0),
        ..AnalysisOptions::default()
    };
    let la = LinkAnalysis::with_options(cfg, &opts)?;
    Ok(la.decision_regions(y_max.unwrap_or(la.k_max())))
}

/// Optimal single threshold and its BER.
pub fn optimal_threshold(cfg: &SystemConfig, search: ThresholdSearch) -> Result<ThresholdResult> {
    Ok(LinkAnalysis::new(cfg)?.optimal_threshold(search))
}

/// Single-threshold BER averaged over all previous-bit patterns, with the
/// conditional CDFs written through the regularized incomplete gamma
/// function (pmf-based noise) or the high-rate pmf.
pub fn ber_std(cfg: &SystemConfig, zeta: usize) -> Result<f64> {
    cfg.validate()?;
    if zeta == 0 {
        return Err(invalid("zeta", "threshold must be at least 1"));
    }
    let k_t = cfg.tx_memory_slots;
    if k_t > PATTERN_LIMIT {
        return Err(Error::EnumerationTooLarge {
            what: "interference patterns",
            size: k_t,
            limit: PATTERN_LIMIT,
        });
    }
    let a = cfg.interference_means()?;
    let noise = Noise::build(cfg, &AnalysisOptions::default())?;
    // P(Y < zeta) given a total transmitter mean `mu`.
    let cdf = |mu: f64| -> Result<f64> {
        match (&noise, cfg.noise) {
            (_, NoiseModel::HomogeneousPoisson { mean }) => regularized_q(zeta as f64, mean + mu),
            (Noise::Pmf(p), _) => {
                let mut terms = Vec::with_capacity(zeta);
                for (m, &pm) in p.masses().iter().enumerate().take(zeta) {
                    terms.push(pm * regularized_q((zeta - m) as f64, mu)?);
                }
                Ok(compensated_sum(terms))
            }
            (Noise::Gaussian(c), _) => {
                let c = Cumulants { k1: c.k1 + mu, k2: c.k2 };
                Ok(highrate_pmf(c, Some(zeta - 1), f64::INFINITY)?.total())
            }
        }
    };
    let n = 1usize << k_t;
    let chunk = 64;
    let partial: Vec<Result<f64>> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut terms = Vec::with_capacity(chunk);
            for mask in c * chunk..((c + 1) * chunk).min(n) {
                let s: f64 = (0..k_t).filter(|j| mask >> j & 1 == 1).map(|j| a[j + 1]).sum();
                terms.push(0.5 * (1.0 - cdf(s)? + cdf(s + a[0])?));
            }
            Ok(compensated_sum(terms))
        })
        .collect();
    let total = compensated_sum(partial.into_iter().collect::<Result<Vec<_>>>()?);
    Ok(total / n as f64)
}

/// Discrete log-concavity `p[k]^2 >= p[k-1] p[k+1]` over the support.
/// A support with gaps is not log-concave.
pub fn log_concavity_check(pmf: &Pmf) -> Result<bool> {
    let m = pmf.masses();
    let Some(lo) = m.iter().position(|&x| x > 0.0) else {
        return Err(invalid("pmf", "support is empty"));
    };
    let hi = m.iter().rposition(|&x| x > 0.0).unwrap_or(lo);
    if m[lo..=hi].iter().any(|&x| x <= 0.0) {
        return Ok(false);
    }
    let ln: Vec<f64> = m[lo..=hi].iter().map(|x| x.ln()).collect();
    Ok(ln.windows(3).all(|w| {
        let slack = 1e-12 * (1.0 + w[1].abs());
        2.0 * w[1] >= w[0] + w[2] - slack
    }))
}
