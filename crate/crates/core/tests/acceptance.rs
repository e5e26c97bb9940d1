//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use common::*;
use dmc_cpns::channel::hit_prob;
use dmc_cpns::cpnsdist::{
    cpns_mean, rare_event_pmf, subset_mixture_pmf, RareEventGrid, RareEventMode, RareEventOptions,
};
use dmc_cpns::detector::{log_concavity_check, memory_slots, noise_pmf, peak_sample_time, AnalysisOptions, ThresholdSearch};
use dmc_cpns::highrate::{cumulant, cumulants, highrate_pmf, highrate_pmf_quadrature, sample_rate_m, Cumulants};
use dmc_cpns::pmf::binomial_weights;
use dmc_cpns::quad::{integrate, QuadOptions};
use dmc_cpns::simulate::{mc_run, pbs_run, PbsConfig};
use dmc_cpns::special::{
    gamma, normal_cdf, parabolic_cylinder_d, poisson_pmf, regularized_q, upper_incomplete_gamma,
};
use dmc_cpns::{ChannelParams, CpnsParams, DetectorSpec, LinkAnalysis, NoiseModel, Result, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Reference link: d_T = 4 um, N = 5e4, k_T = 10, t_s = 2 ms, T = 0.1 s.
fn reference(d_c_um: f64, event_rate: f64, k_c: usize, noise: NoiseModel) -> SystemConfig {
    system(4.0, 5e4, 10, cpns(d_c_um, event_rate, 1e5, k_c, 0.1), 0.002, noise)
}

fn mixture_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k_c = rng.random_range(1..=12);
        let slot = rng.random_range(0.02..0.5);
        let mut p = cpns(rng.random_range(3.0..30.0), 0.0, 10f64.powf(rng.random_range(3.0..6.0)), k_c, slot);
        let count = rng.random_range(1..=12);
        let interval = p.window() / count as f64;
        p.event_rate = rng.random_range(0.01..0.9) / interval;
        let grid = RareEventGrid::new(&p, interval)?;
        let fast = rare_event_pmf(&p, &grid, RareEventMode::Approx, RareEventOptions::default())?;
        let oracle = subset_mixture_pmf(&p, &grid, fast.k_max())?;
        worst = worst.max(fast.max_abs_diff(&oracle));
    }
    outcome(worst < 1e-12, format!("max |diff| = {worst:.2e} over 100 instances (tol 1e-12)"))
}

fn weight_normalization() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for q in [1e-3, 0.01, 0.1, 0.25, 0.5] {
        for n in 1..=500 {
            let s: f64 = binomial_weights(n, q).iter().sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    outcome(worst < 1e-12, format!("max |sum - 1| = {worst:.2e} (tol 1e-12)"))
}

fn special_functions() -> Result<Outcome> {
    let mut g1: f64 = 0.0;
    for i in 0..=400 {
        let x = i as f64 * 0.1;
        g1 = g1.max(rel(upper_incomplete_gamma(1.0, x)?, (-x).exp()));
    }
    let mut d0: f64 = 0.0;
    for i in -200..=200 {
        let z = i as f64 * 0.05;
        d0 = d0.max((parabolic_cylinder_d(0.0, z)? - (-z * z / 4.0).exp()).abs());
    }
    let mut ident: f64 = 0.0;
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        ..QuadOptions::default()
    };
    for j in 0..=20 {
        let nu = j as f64;
        for g in [-3.0, 0.0, 3.0] {
            let f = |x: f64| if x == 0.0 { if nu == 0.0 { 1.0 } else { 0.0 } } else { (nu * x.ln() - x * x - g * x).exp() };
            let peak = 0.25 * (-g + (g * g + 8.0 * nu).sqrt());
            let (num, _) = integrate(f, 0.0, 60.0, &[peak, peak + 3.0, peak + 8.0], opts)?;
            let closed = 2f64.powf(-(nu + 1.0) / 2.0)
                * gamma(nu + 1.0)
                * (g * g / 8.0).exp()
                * parabolic_cylinder_d(-nu - 1.0, g / 2f64.sqrt())?;
            ident = ident.max(rel(closed, num));
        }
    }
    let mut rq: f64 = 0.0;
    for zeta in 1..=200u64 {
        for lam in [0.1, 1.0, 10.0, 50.0, 150.0, 300.0] {
            let direct: f64 = (0..zeta).map(|k| poisson_pmf(k, lam)).sum();
            rq = rq.max((regularized_q(zeta as f64, lam)? - direct).abs());
        }
    }
    let pass = g1 < 1e-13 && d0 < 1e-12 && ident < 1e-8 && rq < 1e-10;
    outcome(
        pass,
        format!(
            "Gamma(1,x) rel {g1:.1e} (1e-13); D_0 {d0:.1e} (1e-12); integral identity rel {ident:.1e} (1e-8); Q vs Poisson CDF {rq:.1e} (1e-10)"
        ),
    )
}

fn highrate_closed_form() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k1 = rng.random_range(5.0..500.0);
        let k2 = (rng.random_range(0.0..1.0) * (k1 * k1 / 4.0f64).ln()).exp();
        let c = Cumulants { k1, k2 };
        let closed = highrate_pmf(c, None, 1e-10)?;
        let quad = highrate_pmf_quadrature(c, closed.k_max())?;
        for (a, b) in closed.masses().iter().zip(quad.masses()) {
            if *b > 1e-12 {
                worst = worst.max(rel(*a, *b));
            }
        }
    }
    outcome(worst < 1e-6, format!("max rel diff = {worst:.2e} over 20 (k1, k2) (tol 1e-6)"))
}

fn cumulant_quadrature(p: &CpnsParams, n: i32) -> Result<f64> {
    let ch = &p.channel;
    let peak = ch.distance * ch.distance / (6.0 * ch.diffusion);
    let window = p.window();
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (p.amplitude * hit_prob(ch, t).unwrap()).powi(n) };
    let breaks: Vec<f64> = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0].iter().map(|s| s * peak).collect();
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_panels: 20_000,
    };
    Ok(p.event_rate * integrate(f, 0.0, window, &breaks, opts)?.0)
}

fn cumulants_vs_quadrature() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut mean_err: f64 = 0.0;
    for d_c in [6.0, 8.0, 12.0, 25.0, 50.0, 100.0] {
        for amp in [8e6, 1e5, 2e4] {
            for slot in [0.5, 0.2, 0.1, 0.02] {
                let p = cpns(d_c, 2.0, amp, 15, slot);
                for n in 1..=6 {
                    worst = worst.max(rel(cumulant(&p, n as u32)?, cumulant_quadrature(&p, n)?));
                }
                mean_err = mean_err.max(rel(cumulant(&p, 1)?, cpns_mean(&p)?));
            }
        }
    }
    outcome(
        worst < 1e-8 && mean_err < 1e-10,
        format!("max rel diff = {worst:.2e} (tol 1e-8); k1 vs mean {mean_err:.1e} (tol 1e-10)"),
    )
}

fn gaussian_limit() -> Result<Outcome> {
    let mut ks = Vec::new();
    for (i, rate) in [10.0, 100.0, 1000.0].into_iter().enumerate() {
        let p = cpns(25.0, rate, 1e5, 15, 0.1);
        let c = cumulants(&p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(60 + i as u64);
        let n = 100_000;
        let mut xs = (0..n).map(|_| sample_rate_m(&p, &mut rng)).collect::<Result<Vec<_>>>()?;
        xs.sort_by(f64::total_cmp);
        let sd = c.k2.sqrt();
        let d = xs
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let f = normal_cdf((x - c.k1) / sd);
                (f - j as f64 / n as f64).max((j + 1) as f64 / n as f64 - f)
            })
            .fold(0.0, f64::max);
        ks.push(d);
    }
    let pass = ks[0] > ks[1] && ks[1] > ks[2] && ks[2] < 0.01;
    outcome(
        pass,
        format!(
            "KS at lambda_e 10/100/1000 = {:.4}/{:.4}/{:.4} (decreasing, last < 0.01; d_C = 25 um)",
            ks[0], ks[1], ks[2]
        ),
    )
}

fn analysis_vs_simulation() -> Result<Outcome> {
    let c = reference(8.0, 2.0, 10, NoiseModel::RareEventApprox { interval: 1e-3 });
    let best = LinkAnalysis::new(&c)?.optimal_threshold(ThresholdSearch::Grid);
    let det = DetectorSpec::single(best.zeta);
    let mc = mc_run(&c, 1_000_000, 7, &det)?;
    let mc_z = (mc.ber - best.ber).abs() / mc.std_error_at(best.ber);
    let start = Instant::now();
    let pbs = pbs_run(&PbsConfig::new(c, 1e-3, 100_000, 7), &det)?;
    let pbs_s = start.elapsed().as_secs_f64();
    let in_ci = pbs.ci95.0 <= best.ber && best.ber <= pbs.ci95.1;
    outcome(
        mc_z < 3.0 && in_ci,
        format!(
            "zeta {} BER {:.3e}; MC {:.3e} ({mc_z:.2} SE, tol 3); PBS {:.3e} CI [{:.3e}, {:.3e}] in {pbs_s:.0} s",
            best.zeta, best.ber, mc.ber, pbs.ber, pbs.ci95.0, pbs.ci95.1
        ),
    )
}

fn baseline_contrast() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for rate in [0.5, 5.0] {
        let c = reference(8.0, rate, 10, NoiseModel::RareEventApprox { interval: 1e-3 });
        let mean = cpns_mean(&c.cpns)?;
        let base = SystemConfig {
            noise: NoiseModel::HomogeneousPoisson { mean },
            ..c
        };
        let a = LinkAnalysis::new(&c)?.optimal_threshold(ThresholdSearch::Grid).ber;
        let b = LinkAnalysis::new(&base)?.optimal_threshold(ThresholdSearch::Grid).ber;
        pass &= b < a;
        parts.push(format!("lambda_e {rate}: baseline {b:.3e} < {a:.3e}"));
    }
    outcome(pass, parts.join("; "))
}

fn rate_monotonicity() -> Result<Outcome> {
    let bers = [50.0, 100.0, 200.0, 500.0, 1000.0]
        .into_iter()
        .map(|rate| Ok(LinkAnalysis::new(&reference(8.0, rate, 10, NoiseModel::HighRate))?.optimal_threshold(ThresholdSearch::Grid).ber))
        .collect::<Result<Vec<f64>>>()?;
    let pass = bers.windows(2).all(|w| w[1] >= w[0]);
    let list: Vec<String> = bers.iter().map(|b| format!("{b:.3e}")).collect();
    outcome(pass, format!("BER over lambda_e 50..1000 = [{}]", list.join(", ")))
}

fn theorem_one() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    let mut max_regions = 0;
    for _ in 0..50 {
        let slot = rng.random_range(0.05..0.3);
        let c = system(
            rng.random_range(2.0..8.0),
            10f64.powf(rng.random_range(3.5..5.0)),
            rng.random_range(1..=12),
            cpns(rng.random_range(5.0..30.0), rng.random_range(50.0..1000.0), 10f64.powf(rng.random_range(4.0..6.0)), rng.random_range(1..=15), slot),
            slot * rng.random_range(0.01..1.0),
            NoiseModel::HighRate,
        );
        let la = LinkAnalysis::new(&c)?;
        let regions = la.decision_regions(la.k_max());
        max_regions = max_regions.max(regions.thresholds.len());
        let bis = la.optimal_threshold(ThresholdSearch::Bisection);
        let grid = la.optimal_threshold(ThresholdSearch::Grid);
        let ok = regions.thresholds.len() == 1
            && la.ber_is_unimodal()
            && bis.search == ThresholdSearch::Bisection
            && bis.zeta == grid.zeta
            && bis.ber == grid.ber;
        if !ok {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{failures} of 50 configs violate single threshold / unimodality / bisection == grid (max thresholds {max_regions})"),
    )
}

fn multimodal() -> Result<Outcome> {
    let r = 2.2e-6;
    let tx = ChannelParams::new(D, 10e-6, r)?;
    let noise_ch = ChannelParams::new(D, 5.5e-6, r)?;
    let slot = 0.2;
    let c = SystemConfig {
        transmitter: tx,
        molecules: 2e5,
        tx_memory_slots: memory_slots(&tx, slot, 0.95)?,
        cpns: CpnsParams {
            channel: noise_ch,
            event_rate: 15.0,
            amplitude: 5e5,
            memory_slots: memory_slots(&noise_ch, slot, 0.95)?,
            slot,
        },
        sample_time: peak_sample_time(&tx, slot),
        noise: NoiseModel::RareEventApprox { interval: 1e-3 },
    };
    let pmf = noise_pmf(&c, &AnalysisOptions::default())?;
    let concave = log_concavity_check(&pmf)?;
    let la = LinkAnalysis::new(&c)?;
    let regions = la.decision_regions(la.k_max());
    let std = la.optimal_threshold(ThresholdSearch::Grid).ber;
    let mtd = la.ber_of(&regions);
    let gap = (std - mtd) / mtd;
    outcome(
        !concave && regions.thresholds.len() >= 3 && gap < 0.1,
        format!(
            "log-concave {concave}; thresholds {:?}; STD {std:.5} vs MTD {mtd:.5}, gap {:.2}% (tol 10%)",
            regions.thresholds,
            gap * 100.0
        ),
    )
}

fn interval_convergence() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for rate in [2.0, 10.0] {
        for (label, exact) in [("approx", false), ("exact", true)] {
            let bers = [0.1, 0.05, 0.025, 0.0125, 0.00625]
                .into_iter()
                .map(|x| {
                    let interval = x / rate;
                    let noise = if exact {
                        NoiseModel::RareEventExact { interval }
                    } else {
                        NoiseModel::RareEventApprox { interval }
                    };
                    Ok(LinkAnalysis::new(&reference(8.0, rate, 10, noise))?.optimal_threshold(ThresholdSearch::Grid).ber)
                })
                .collect::<Result<Vec<f64>>>()?;
            let gaps: Vec<f64> = bers.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
            let dec = gaps.windows(2).all(|w| w[1] < w[0]);
            // The verdict uses exact mode; approx mode samples p_C at interval
            // edges and is not monotone at coarse intervals, so it is only reported.
            if exact {
                pass &= dec;
            }
            let g: Vec<String> = gaps.iter().map(|x| format!("{x:.2e}")).collect();
            parts.push(format!("lambda_e {rate} {label}: [{}] decreasing {dec}", g.join(", ")));
        }
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 12] = [
        ("mixture identity", mixture_identity),
        ("weight normalization", weight_normalization),
        ("special functions", special_functions),
        ("high-rate closed form", highrate_closed_form),
        ("cumulants", cumulants_vs_quadrature),
        ("Gaussian limit", gaussian_limit),
        ("analysis vs simulation", analysis_vs_simulation),
        ("baseline contrast", baseline_contrast),
        ("rate monotonicity", rate_monotonicity),
        ("single threshold", theorem_one),
        ("multimodal regime", multimodal),
        ("interval convergence", interval_convergence),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} [{n:2}] {name}: {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
