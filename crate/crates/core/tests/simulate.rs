mod common;

use common::*;
use dmc_cpns::channel::{hit_prob, sphere_occupancy, ChannelParams};
use dmc_cpns::cpnsdist::{rare_event_pmf, RareEventGrid, RareEventMode, RareEventOptions};
use dmc_cpns::detector::*;
use dmc_cpns::simulate::*;
use dmc_cpns::Pmf;

fn tx_only(d_um: f64, r_um: f64, n: f64, k_t: usize) -> SystemConfig {
    let mut c = system(d_um, n, k_t, cpns(8.0, 0.0, 0.0, 1, 0.01), 0.002, NoiseModel::None);
    c.transmitter = ChannelParams::new(D, d_um * 1e-6, r_um * 1e-6).unwrap();
    c
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = xs.clone().count();
    let m = xs.clone().sum::<f64>() / n as f64;
    let v = xs.map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (m, v, n)
}

/// Lag-1 autocovariance of the counts within blocks.
fn lag1_cov(obs: &[(u8, u64)]) -> (f64, f64) {
    let m = obs.iter().map(|o| o.1 as f64).sum::<f64>() / obs.len() as f64;
    let prods: Vec<f64> = obs
        .chunks(BLOCK_BITS)
        .flat_map(|c| c.windows(2).map(|w| (w[0].1 as f64 - m) * (w[1].1 as f64 - m)).collect::<Vec<_>>())
        .collect();
    let (c, v, n) = mean_var(prods.iter().copied());
    (c, (v / n as f64).sqrt())
}

#[test]
fn thinned_counts_have_exact_marginal_means() {
    let c = tx_only(3.0, 1.0, 2000.0, 5);
    let p = PbsConfig::new(c, 1e-3, 40_000, 11);
    let obs = pbs_observations(&p).unwrap();
    // Molecules live max(k_T, k_C) + 1 = 6 slots.
    let occ = |j: usize| sphere_occupancy(&c.transmitter, j as f64 * 0.01 + 0.002);
    let isi: f64 = (1..=5).map(|j| 0.5 * occ(j)).sum();
    for bit in [0u8, 1] {
        let want = 2000.0 * (isi + bit as f64 * occ(0));
        let (m, v, n) = mean_var(obs.iter().filter(|o| o.0 == bit).map(|o| o.1 as f64));
        let se = (v / n as f64).sqrt();
        assert!((m - want).abs() < 4.0 * se, "bit {bit}: {m} vs {want} (se {se})");
    }
}

#[test]
fn thinned_and_per_tick_walks_agree() {
    let c = tx_only(2.0, 1.0, 400.0, 2);
    let mut p = PbsConfig::new(c, 1e-3, 6000, 5);
    let thinned = pbs_observations(&p).unwrap();
    p.mode = PbsMode::PerTick;
    p.seed = 6;
    let ticked = pbs_observations(&p).unwrap();
    for bit in [0u8, 1] {
        let (m1, v1, n1) = mean_var(thinned.iter().filter(|o| o.0 == bit).map(|o| o.1 as f64));
        let (m2, v2, n2) = mean_var(ticked.iter().filter(|o| o.0 == bit).map(|o| o.1 as f64));
        let se = (v1 / n1 as f64 + v2 / n2 as f64).sqrt();
        assert!((m1 - m2).abs() < 4.0 * se, "bit {bit}: {m1} vs {m2}");
    }
    // Slot-to-slot correlation comes from the same molecules being counted twice.
    let (c1, s1) = lag1_cov(&thinned);
    let (c2, s2) = lag1_cov(&ticked);
    assert!(c1 > 0.0 && c2 > 0.0);
    assert!((c1 - c2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(), "{c1} vs {c2}");
}

#[test]
fn silent_link_errs_half_the_time() {
    let c = system(4.0, 0.0, 10, cpns(8.0, 0.0, 1e5, 10, 0.1), 0.002, NoiseModel::None);
    let est = pbs_run(&PbsConfig::new(c, 1e-3, 10_000, 1), &DetectorSpec::single(1)).unwrap();
    assert!(est.ci95.0 <= 0.5 && 0.5 <= est.ci95.1, "{est:?}");
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let c = system(4.0, 5e4, 10, cpns(8.0, 2.0, 1e5, 10, 0.1), 0.002, NoiseModel::RareEventApprox { interval: 0.01 });
    let p = PbsConfig::new(c, 1e-3, 10_000, 42);
    let det = DetectorSpec::single(20);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (pbs_run(&p, &det).unwrap(), mc_run(&c, 10_000, 42, &det).unwrap()))
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(1));
}

#[test]
fn single_particles_follow_the_exact_occupancy() {
    let ch = channel(4.0);
    let t = 0.003;
    let n = 1_000_000;
    let hits = single_release_occupancy(&ch, t, 1e-4, n, 9).unwrap();
    let exact = sphere_occupancy(&ch, t);
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    let got = hits as f64 / n as f64;
    assert!((got - exact).abs() < 4.0 * se, "{got} vs {exact}");
    // The point-receiver formula is an approximation; its error here is well
    // below the Monte Carlo resolution of the BER comparisons.
    let point = hit_prob(&ch, t).unwrap();
    let rel_err = (point - exact) / exact;
    eprintln!("point-receiver relative error at d = 4 um, t = {t} s: {rel_err:e}");
    assert!(rel_err.abs() < 0.02);
}

#[test]
fn noise_only_counts_match_rare_event_pmf() {
    let mut c = system(4.0, 0.0, 1, cpns(8.0, 2.0, 1e5, 10, 0.1), 0.002, NoiseModel::None);
    c.transmitter = channel(4.0);
    let mut p = PbsConfig::new(c, 1e-3, 100_000, 3);
    p.retirement = Retirement::PerSource;
    let obs = pbs_observations(&p).unwrap();
    let k_max = obs.iter().map(|o| o.1).max().unwrap() as usize;
    let mut hist = vec![0.0; k_max + 1];
    for o in &obs {
        hist[o.1 as usize] += 1.0 / obs.len() as f64;
    }
    let emp = Pmf::new(hist, 0.0).unwrap();
    let grid = RareEventGrid::new(&c.cpns, 1e-3).unwrap();
    let ana = rare_event_pmf(&c.cpns, &grid, RareEventMode::Approx, RareEventOptions::default()).unwrap();
    let tv = emp.total_variation(&ana);
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn mc_signal_mean_is_thinned_release() {
    let c = system(4.0, 5e4, 10, cpns(8.0, 2.0, 1e5, 10, 0.1), 0.002, NoiseModel::None);
    let a = c.interference_means().unwrap();
    let obs = mc_observations(&c, 200_000, 4).unwrap();
    let want = a[0] + 0.5 * a[1..].iter().sum::<f64>();
    let (m, v, n) = mean_var(obs.iter().filter(|o| o.0 == 1).map(|o| o.1 as f64));
    assert!((m - want).abs() < 3.0 * (v / n as f64).sqrt(), "{m} vs {want}");
}

#[test]
fn mc_noiseless_ber_at_threshold_one() {
    let c = system(4.0, 5e4, 0, cpns(8.0, 2.0, 1e5, 10, 0.1), 0.025, NoiseModel::None);
    let est = mc_run(&c, 400_000, 8, &DetectorSpec::single(1)).unwrap();
    let want = 0.5 * (-c.interference_means().unwrap()[0]).exp();
    assert!((est.ber - want).abs() < 3.0 * est.std_error_at(want), "{} vs {want}", est.ber);
}

#[test]
fn mc_matches_analysis_with_cpns_noise() {
    let c = system(4.0, 5e4, 10, cpns(8.0, 2.0, 1e5, 10, 0.1), 0.002, NoiseModel::RareEventApprox { interval: 1e-3 });
    let la = LinkAnalysis::new(&c).unwrap();
    let best = la.optimal_threshold(ThresholdSearch::Grid);
    let est = mc_run(&c, 200_000, 21, &DetectorSpec::single(best.zeta)).unwrap();
    assert!((est.ber - best.ber).abs() < 3.0 * est.std_error_at(best.ber), "{} vs {}", est.ber, best.ber);
}

#[test]
fn bad_time_step_is_rejected() {
    let c = tx_only(3.0, 1.0, 10.0, 1);
    assert!(pbs_run(&PbsConfig::new(c, 0.003, 10, 0), &DetectorSpec::single(1)).is_err());
    assert!(pbs_run(&PbsConfig::new(c, 0.0015, 10, 0), &DetectorSpec::single(1)).is_err());
}

#[test]
fn population_cap_fails_loudly() {
    let c = tx_only(3.0, 1.0, 5000.0, 1);
    let mut p = PbsConfig::new(c, 1e-3, 100, 0);
    p.mode = PbsMode::PerTick;
    p.population_cap = 1000;
    assert!(matches!(
        pbs_observations(&p),
        Err(dmc_cpns::Error::PopulationCap { cap: 1000 })
    ));
}
