mod common;

use common::*;
use dmc_cpns::channel::*;
use dmc_cpns::quad::{integrate, QuadOptions};
use proptest::prelude::*;

#[test]
fn hit_prob_goldens() {
    for r in rows(&goldens(), "hit_prob") {
        let ch = ChannelParams::new(r[0], r[1], r[2]).unwrap();
        let got = hit_prob(&ch, r[3]).unwrap();
        assert!(rel(got, r[4]) < 1e-13, "r = {}, t = {}: {got} vs {}", r[1], r[3], r[4]);
    }
}

#[test]
fn peak_time_and_value() {
    let ch = channel(4.0);
    let t = ch.peak_time();
    assert!(rel(t, 0.002_339_181_286_549_707_6) < 1e-15);
    assert!(rel(hit_prob(&ch, t).unwrap(), 6.022_669_132_959_737_4e-4) < 1e-13);
    for f in [0.9, 0.99, 1.01, 1.1] {
        assert!(hit_prob(&ch, f * t).unwrap() < hit_prob(&ch, t).unwrap());
    }
}

#[test]
fn integral_goldens_and_quadrature() {
    for r in rows(&goldens(), "hit_integral") {
        let ch = ChannelParams::new(r[0], r[1], r[2]).unwrap();
        let closed = hit_prob_integral(&ch, r[3]).unwrap();
        assert!(rel(closed, r[4]) < 1e-12);
        let (q, _) = integrate(|t| hit_prob(&ch, t).unwrap(), 0.0, r[3], &[ch.peak_time()], QuadOptions::default()).unwrap();
        assert!(rel(q, closed) < 1e-10);
    }
    let ch = channel(4.0);
    assert!(rel(hit_prob_total(&ch), 9.137_426_900_584_795_3e-6) < 1e-13);
}

#[test]
fn memory_example() {
    let ch = channel(4.0);
    let m = channel_memory(&ch, 0.1, 0.95).unwrap();
    assert!(rel(m.time, 1.784_662_768_775_852_7) < 1e-12);
    assert_eq!(m.slots, 17);
    assert!(channel_memory(&ch, 0.1, 1.0).is_err());
    assert!(channel_memory(&ch, 0.1, 0.0).is_err());
}

#[test]
fn exact_sphere_converges_to_point_receiver() {
    // Relative gap shrinks as the receiver gets small compared with the distance.
    let mut last = f64::INFINITY;
    for d in [2.0, 4.0, 8.0, 16.0] {
        let ch = channel(d);
        let t = ch.peak_time();
        let gap = rel(sphere_occupancy(&ch, t), hit_prob(&ch, t).unwrap());
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-3);
}

proptest! {
    #[test]
    fn hit_prob_bounded_and_integral_monotone(d in 1.0f64..50.0, t1 in 1e-5f64..5.0, t2 in 1e-5f64..5.0) {
        let ch = channel(d);
        let p = hit_prob(&ch, t1).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let ia = hit_prob_integral(&ch, a).unwrap();
        let ib = hit_prob_integral(&ch, b).unwrap();
        prop_assert!(ia <= ib);
        prop_assert!(ib <= hit_prob_total(&ch) * (1.0 + 1e-15));
    }

    #[test]
    fn memory_grows_with_rho(d in 1.0f64..50.0, r1 in 0.01f64..0.99, r2 in 0.01f64..0.99) {
        let ch = channel(d);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let a = channel_memory(&ch, 0.1, lo).unwrap();
        let b = channel_memory(&ch, 0.1, hi).unwrap();
        prop_assert!(a.time <= b.time);
        prop_assert!(a.slots <= b.slots);
    }
}
