//! Particle-based simulation.
//!
//! Geometry: receiver sphere centred at the origin, transmitter at
//! `(d_T, 0, 0)`, noise source at `(-d_C, 0, 0)`. Every molecule performs a
//! Gaussian random walk with per-axis variance `2 D dt` per tick and is
//! counted whenever it sits inside the (transparent) receiver at a sampling
//! tick. Release counts are Poisson, so the molecules of one release form a
//! Poisson process on path space.
//!
//! [`PbsMode::Thinned`] uses that to simulate only molecules that are inside
//! the receiver at one or more sampling ticks. For each sampling age `a_i`
//! it draws the molecules inside at `a_i` (Poisson with the exact sphere
//! occupancy), samples their earlier positions from the Gaussian bridge and
//! keeps those that were outside at every earlier sampling tick. Kept
//! molecules then walk forward. Positions at the sampling ticks have
//! exactly the law of the per-tick walk.
//!
//! [`PbsMode::PerTick`] steps every molecule every tick. It is only
//! practical for small releases and serves as a cross-check.

use super::{blocks, block_rng, count_errors, BerEstimate};
use crate::channel::{sphere_occupancy, ChannelParams};
use crate::cpnsdist::poisson_sample;
use crate::detector::{DetectorSpec, SystemConfig};
use crate::error::{invalid, require_positive, Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbsMode {
    Thinned,
    PerTick,
}

/// When molecules stop being tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retirement {
    /// Every molecule after `max(k_T, k_C) + 1` slots of age.
    Uniform,
    /// Transmitter molecules after `k_T T + t_s`, noise molecules after
    /// `k_C T`, matching the memory used by the analysis.
    PerSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbsConfig {
    /// Time step in s.
    pub dt: f64,
    pub n_bits: usize,
    pub seed: u64,
    pub cfg: SystemConfig,
    /// Slots simulated before the first counted bit of every block.
    pub warmup_slots: usize,
    pub mode: PbsMode,
    pub retirement: Retirement,
    /// Largest number of molecules tracked at once.
    pub population_cap: usize,
}

impl PbsConfig {
    pub fn new(cfg: SystemConfig, dt: f64, n_bits: usize, seed: u64) -> Self {
        Self {
            dt,
            n_bits,
            seed,
            cfg,
            warmup_slots: cfg.tx_memory_slots.max(cfg.cpns.memory_slots) + 1,
            mode: PbsMode::Thinned,
            retirement: Retirement::Uniform,
            population_cap: 20_000_000,
        }
    }

    fn validate(&self) -> Result<Ticks> {
        self.cfg.validate()?;
        require_positive("dt", self.dt)?;
        if self.n_bits == 0 {
            return Err(invalid("n_bits", "must be at least 1"));
        }
        let slot = self.cfg.slot();
        if self.dt > slot / 10.0 * (1.0 + 1e-12) {
            return Err(invalid("dt", "must not exceed a tenth of the slot"));
        }
        let ratio = slot / self.dt;
        let per_slot = ratio.round();
        if (ratio - per_slot).abs() > 1e-6 * ratio {
            return Err(invalid("dt", "must divide the slot length"));
        }
        let per_slot = per_slot as u64;
        let sample = ((self.cfg.sample_time / self.dt).round() as u64).clamp(1, per_slot);
        let (k_t, k_c) = (self.cfg.tx_memory_slots as u64, self.cfg.cpns.memory_slots as u64);
        let (tx_life, noise_life) = match self.retirement {
            Retirement::Uniform => {
                let l = (k_t.max(k_c) + 1) * per_slot;
                (l, l)
            }
            Retirement::PerSource => (k_t * per_slot + sample, k_c * per_slot),
        };
        if self.warmup_slots as u64 * per_slot < tx_life.max(noise_life) {
            log::warn!("warm-up shorter than the molecule lifetime; early slots see less interference");
        }
        Ok(Ticks {
            per_slot,
            sample,
            tx_life,
            noise_life,
        })
    }
}

/// Time grid in ticks.
#[derive(Debug, Clone, Copy)]
struct Ticks {
    per_slot: u64,
    sample: u64,
    tx_life: u64,
    noise_life: u64,
}

type Vec3 = [f64; 3];

fn normal3<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> Vec3 {
    let mut z = [0.0; 3];
    for v in z.iter_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v = sd * n;
    }
    z
}

fn inside(p: &Vec3, r2: f64) -> bool {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= r2
}

/// Per-block state shared by both modes.
struct Block<'a> {
    pcfg: &'a PbsConfig,
    ticks: Ticks,
    /// Slots from warm-up start to block end.
    slots: usize,
    /// Transmitted bit per slot.
    bits: Vec<u8>,
    /// Molecule count at each slot's sampling tick.
    counts: Vec<u64>,
}

impl Block<'_> {
    fn sample_tick(&self, slot: usize) -> i64 {
        (slot as u64 * self.ticks.per_slot + self.ticks.sample) as i64
    }

    /// Release ticks of the noise events, starting one noise lifetime
    /// before the block so that the stream is stationary from slot 0.
    fn noise_events(&self, rng: &mut ChaCha8Rng) -> Vec<i64> {
        let cpns = &self.pcfg.cfg.cpns;
        let mut out = Vec::new();
        if cpns.event_rate <= 0.0 || cpns.amplitude <= 0.0 {
            return out;
        }
        let dt = self.pcfg.dt;
        let end = self.slots as f64 * cpns.slot;
        let mut t = -(self.ticks.noise_life as f64) * dt;
        let gap = Exp::new(cpns.event_rate).expect("positive rate");
        loop {
            t += gap.sample(rng);
            if t >= end {
                return out;
            }
            // Released at the next tick boundary.
            out.push((t / dt).ceil() as i64);
        }
    }
}

/// Molecule emitter.
#[derive(Clone, Copy)]
struct Source {
    x: f64,
    channel: ChannelParams,
    life: u64,
}

fn simulate_block(pcfg: &PbsConfig, ticks: Ticks, block: usize, n_bits: usize) -> Result<Vec<(u8, u64)>> {
    let mut rng = block_rng(pcfg.seed, block);
    let warm = pcfg.warmup_slots;
    let slots = warm + n_bits;
    let bits: Vec<u8> = (0..slots).map(|_| rng.random_range(0..2u8)).collect();
    let mut b = Block {
        pcfg,
        ticks,
        slots,
        bits,
        counts: vec![0; slots],
    };
    let cfg = &pcfg.cfg;
    let radius = cfg.transmitter.receiver_radius;
    let tx = Source {
        x: cfg.transmitter.distance,
        channel: cfg.transmitter,
        life: ticks.tx_life,
    };
    let noise = Source {
        x: -cfg.cpns.channel.distance,
        channel: ChannelParams {
            receiver_radius: radius,
            ..cfg.cpns.channel
        },
        life: ticks.noise_life,
    };
    let events = b.noise_events(&mut rng);
    match pcfg.mode {
        PbsMode::Thinned => {
            let mut th = Thinned::new(pcfg);
            for s in 0..slots {
                if b.bits[s] == 1 {
                    th.release(&mut b, &mut rng, tx, (s as u64 * ticks.per_slot) as i64, cfg.molecules)?;
                }
            }
            for &e in &events {
                th.release(&mut b, &mut rng, noise, e, cfg.cpns.amplitude)?;
            }
        }
        PbsMode::PerTick => per_tick(&mut b, &mut rng, tx, noise, &events)?,
    }
    Ok((warm..slots).map(|s| (b.bits[s], b.counts[s])).collect())
}

/// Poisson-thinned exact simulation.
struct Thinned {
    dt: f64,
    cap: usize,
    ages: Vec<u64>,
    slots_hit: Vec<usize>,
}

impl Thinned {
    fn new(pcfg: &PbsConfig) -> Self {
        Self {
            dt: pcfg.dt,
            cap: pcfg.population_cap,
            ages: Vec::new(),
            slots_hit: Vec::new(),
        }
    }

    /// One release of `Poisson(mean)` molecules at `tick`.
    fn release(&mut self, b: &mut Block, rng: &mut ChaCha8Rng, src: Source, tick: i64, mean: f64) -> Result<()> {
        if mean <= 0.0 {
            return Ok(());
        }
        let d = src.channel.diffusion;
        let r_r = src.channel.receiver_radius;
        let r2 = r_r * r_r;
        self.ages.clear();
        self.slots_hit.clear();
        let (per, sample) = (b.ticks.per_slot as i64, b.ticks.sample as i64);
        let first = if tick < sample { 0 } else { ((tick - sample) / per + 1) as usize };
        for s in first..b.slots {
            let age = (b.sample_tick(s) - tick) as u64;
            if age > src.life {
                break;
            }
            self.ages.push(age);
            self.slots_hit.push(s);
        }
        let src_pos = [src.x, 0.0, 0.0];
        let mut tracked = 0usize;
        for i in 0..self.ages.len() {
            let t_i = self.ages[i] as f64 * self.dt;
            let n = poisson_sample(mean * sphere_occupancy(&src.channel, t_i), rng);
            tracked += n as usize;
            if tracked > self.cap {
                return Err(Error::PopulationCap { cap: self.cap });
            }
            let sd_i = (2.0 * d * t_i).sqrt();
            'molecule: for _ in 0..n {
                let x = sample_in_ball(rng, &src_pos, sd_i, r_r)?;
                // Gaussian bridge from the source at age 0 to x at age a_i.
                let mut p = src_pos;
                let mut u = 0.0;
                for j in 0..i {
                    let v = self.ages[j] as f64 * self.dt;
                    let w = (v - u) / (t_i - u);
                    let z = normal3(rng, (2.0 * d * (v - u) * (t_i - v) / (t_i - u)).sqrt());
                    for k in 0..3 {
                        p[k] += w * (x[k] - p[k]) + z[k];
                    }
                    if inside(&p, r2) {
                        continue 'molecule;
                    }
                    u = v;
                }
                b.counts[self.slots_hit[i]] += 1;
                let mut p = x;
                for j in i + 1..self.ages.len() {
                    let step = (self.ages[j] - self.ages[j - 1]) as f64 * self.dt;
                    let z = normal3(rng, (2.0 * d * step).sqrt());
                    for k in 0..3 {
                        p[k] += z[k];
                    }
                    if inside(&p, r2) {
                        b.counts[self.slots_hit[j]] += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Point in the receiver ball drawn from the Gaussian `N(centre, sd^2 I)`
/// restricted to the ball (uniform proposal, rejection).
fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, centre: &Vec3, sd: f64, radius: f64) -> Result<Vec3> {
    let dist = centre[0].abs();
    let near = (dist - radius).max(0.0);
    let var2 = 2.0 * sd * sd;
    for _ in 0..10_000_000u32 {
        let p = [
            radius * (2.0 * rng.random::<f64>() - 1.0),
            radius * (2.0 * rng.random::<f64>() - 1.0),
            radius * (2.0 * rng.random::<f64>() - 1.0),
        ];
        if !inside(&p, radius * radius) {
            continue;
        }
        let d2 = (p[0] - centre[0]).powi(2) + p[1] * p[1] + p[2] * p[2];
        if rng.random::<f64>() < (-(d2 - near * near) / var2).exp() {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence {
        what: "receiver-conditioned position sampling",
        iterations: 10_000_000,
    })
}

struct Particle {
    pos: Vec3,
    born: i64,
    life: u64,
}

fn per_tick(b: &mut Block, rng: &mut ChaCha8Rng, tx: Source, noise: Source, events: &[i64]) -> Result<()> {
    let pcfg = b.pcfg;
    let r_r = tx.channel.receiver_radius;
    let r2 = r_r * r_r;
    let sd = (2.0 * tx.channel.diffusion * pcfg.dt).sqrt();
    let per = b.ticks.per_slot as i64;
    let start = events.first().copied().unwrap_or(0).min(0);
    let end = b.sample_tick(b.slots - 1);
    let mut parts: Vec<Particle> = Vec::new();
    let mut ev = events.iter().peekable();
    let mut next_sample = 0usize;
    for t in start..=end {
        // Step, retire, release, then count.
        for p in parts.iter_mut() {
            let z = normal3(rng, sd);
            for k in 0..3 {
                p.pos[k] += z[k];
            }
        }
        parts.retain(|p| (t - p.born) as u64 <= p.life);
        while ev.peek().is_some_and(|&&e| e <= t) {
            ev.next();
            for _ in 0..poisson_sample(pcfg.cfg.cpns.amplitude, rng) {
                parts.push(Particle {
                    pos: [noise.x, 0.0, 0.0],
                    born: t,
                    life: noise.life,
                });
            }
        }
        if t >= 0 && t % per == 0 {
            let s = (t / per) as usize;
            if s < b.slots && b.bits[s] == 1 {
                for _ in 0..poisson_sample(pcfg.cfg.molecules, rng) {
                    parts.push(Particle {
                        pos: [tx.x, 0.0, 0.0],
                        born: t,
                        life: tx.life,
                    });
                }
            }
        }
        if parts.len() > pcfg.population_cap {
            return Err(Error::PopulationCap { cap: pcfg.population_cap });
        }
        if next_sample < b.slots && t == b.sample_tick(next_sample) {
            b.counts[next_sample] = parts.iter().filter(|p| p.born < t && inside(&p.pos, r2)).count() as u64;
            next_sample += 1;
        }
    }
    Ok(())
}

/// `(transmitted bit, received count)` for every counted slot.
pub fn pbs_observations(pcfg: &PbsConfig) -> Result<Vec<(u8, u64)>> {
    let ticks = pcfg.validate()?;
    let parts: Vec<Result<Vec<(u8, u64)>>> = blocks(pcfg.n_bits)
        .into_par_iter()
        .map(|(blk, n)| simulate_block(pcfg, ticks, blk, n))
        .collect();
    let mut out = Vec::with_capacity(pcfg.n_bits);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Particle-based BER estimate for a fixed detector.
pub fn pbs_run(pcfg: &PbsConfig, detector: &DetectorSpec) -> Result<BerEstimate> {
    let obs = pbs_observations(pcfg)?;
    Ok(BerEstimate::new(count_errors(&obs, detector), obs.len() as u64))
}

/// Releases `n` molecules at distance `ch.distance` and steps them tick by
/// tick until `t`; returns how many sit inside the receiver.
pub fn single_release_occupancy(ch: &ChannelParams, t: f64, dt: f64, n: usize, seed: u64) -> Result<u64> {
    ch.validate()?;
    require_positive("dt", dt)?;
    let steps = (t / dt).round() as usize;
    let sd = (2.0 * ch.diffusion * dt).sqrt();
    let r2 = ch.receiver_radius * ch.receiver_radius;
    let parts: Vec<u64> = blocks(n)
        .into_par_iter()
        .map(|(blk, m)| {
            let mut rng = block_rng(seed, blk);
            let mut hits = 0;
            for _ in 0..m {
                let mut p = [ch.distance, 0.0, 0.0];
                for _ in 0..steps {
                    let z = normal3(&mut rng, sd);
                    for k in 0..3 {
                        p[k] += z[k];
                    }
                }
                hits += u64::from(inside(&p, r2));
            }
            hits
        })
        .collect();
    Ok(parts.iter().sum())
}
