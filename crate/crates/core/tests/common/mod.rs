#![allow(dead_code)]

use dmc_cpns::{ChannelParams, CpnsParams, NoiseModel, SystemConfig};

pub const D: f64 = 1.14e-9;
pub const R_R: f64 = 0.5e-6;

pub fn channel(distance_um: f64) -> ChannelParams {
    ChannelParams::new(D, distance_um * 1e-6, R_R).unwrap()
}

pub fn cpns(d_c_um: f64, event_rate: f64, amplitude: f64, memory_slots: usize, slot: f64) -> CpnsParams {
    CpnsParams {
        channel: channel(d_c_um),
        event_rate,
        amplitude,
        memory_slots,
        slot,
    }
}

pub fn goldens() -> serde_json::Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/goldens.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn rows(v: &serde_json::Value, key: &str) -> Vec<Vec<f64>> {
    v[key]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub fn system(d_t_um: f64, molecules: f64, k_t: usize, cpns: CpnsParams, sample_time: f64, noise: NoiseModel) -> SystemConfig {
    SystemConfig {
        transmitter: channel(d_t_um),
        molecules,
        tx_memory_slots: k_t,
        cpns,
        sample_time,
        noise,
    }
}
