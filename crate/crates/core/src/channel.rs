//! Point-transmitter, passive spherical receiver in an unbounded 3-D medium.

use crate::error::{invalid, require_positive, Error, Result};
use crate::special::{erfc, erfc_inv};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Geometry of one source-receiver link. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Diffusion coefficient `D` in m^2/s.
    pub diffusion: f64,
    /// Source-to-receiver-centre distance in m.
    pub distance: f64,
    /// Receiver radius `r_R` in m.
    pub receiver_radius: f64,
}

/// Channel memory for a reception-ratio threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Memory {
    /// Time after which a fraction `rho` of the ever-received mass has arrived.
    pub time: f64,
    /// `floor(time / slot)`.
    pub slots: usize,
}

impl ChannelParams {
    pub fn new(diffusion: f64, distance: f64, receiver_radius: f64) -> Result<Self> {
        let c = Self {
            diffusion,
            distance,
            receiver_radius,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("diffusion", self.diffusion)?;
        require_positive("distance", self.distance)?;
        require_positive("receiver_radius", self.receiver_radius)?;
        Ok(())
    }

    /// `V_R = 4/3 pi r_R^3`.
    pub fn receiver_volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.receiver_radius.powi(3)
    }

    /// Time of the maximum of [`hit_prob`], `r^2 / (6 D)`.
    pub fn peak_time(&self) -> f64 {
        self.distance * self.distance / (6.0 * self.diffusion)
    }

    /// Point-receiver hit probability without the validity check.
    pub(crate) fn hit_prob_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let r = self.distance;
        let d4t = 4.0 * self.diffusion * t;
        self.receiver_volume() * (PI * d4t).powf(-1.5) * (-r * r / d4t).exp()
    }
}

/// Probability that a molecule released at `t = 0` is inside the receiver at `t`
/// (point-receiver approximation). Zero for `t <= 0`.
pub fn hit_prob(ch: &ChannelParams, t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(invalid("t", "must not be NaN"));
    }
    let p = ch.hit_prob_unchecked(t);
    if p > 1.0 {
        return Err(Error::ModelValidity { value: p, t });
    }
    Ok(p)
}

/// `∫_0^t hit_prob(s) ds = V_R / (4 pi D r) erfc(r / (2 sqrt(D t)))`.
pub fn hit_prob_integral(ch: &ChannelParams, t: f64) -> Result<f64> {
    if t.is_nan() {
        return Err(invalid("t", "must not be NaN"));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(hit_prob_total(ch) * erfc(ch.distance / (2.0 * (ch.diffusion * t).sqrt())))
}

/// `∫_0^∞ hit_prob(s) ds = V_R / (4 pi D r)`.
pub fn hit_prob_total(ch: &ChannelParams) -> f64 {
    ch.receiver_volume() / (4.0 * PI * ch.diffusion * ch.distance)
}

/// Memory length from `erfc(r / (2 sqrt(D t_m))) = rho`.
pub fn channel_memory(ch: &ChannelParams, slot: f64, rho: f64) -> Result<Memory> {
    require_positive("slot", slot)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho", format!("must lie in (0, 1), got {rho}")));
    }
    let e = erfc_inv(rho)?;
    let time = ch.distance * ch.distance / (4.0 * ch.diffusion * e * e);
    let ratio = time / slot;
    // Guard against a ratio that lands a hair below an integer.
    let slots = (ratio * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    Ok(Memory { time, slots })
}

/// Exact probability that a molecule released at distance `r` sits inside a
/// sphere of radius `r_R` at time `t` (no point-receiver approximation).
pub fn sphere_occupancy(ch: &ChannelParams, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (r, a) = (ch.distance, ch.receiver_radius);
    let s = 2.0 * (ch.diffusion * t).sqrt();
    0.5 * (erfc((r - a) / s) - erfc((r + a) / s))
        + (ch.diffusion * t / PI).sqrt() / r
            * ((-((r + a) / s).powi(2)).exp() - (-((r - a) / s).powi(2)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch() -> ChannelParams {
        ChannelParams::new(1.14e-9, 4e-6, 0.5e-6).unwrap()
    }

    #[test]
    fn zero_before_release() {
        assert_eq!(hit_prob(&ch(), 0.0).unwrap(), 0.0);
        assert_eq!(hit_prob(&ch(), -1.0).unwrap(), 0.0);
        assert_eq!(hit_prob_integral(&ch(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn memory_golden() {
        let m = channel_memory(&ch(), 0.2, 0.95).unwrap();
        assert!((m.time - 1.784_662_768_775_852_7).abs() < 1e-10);
        assert_eq!(m.slots, 8);
    }

    #[test]
    fn validity_error_for_oversized_receiver() {
        // The peak value is 0.4 (r_R / r)^3, so only an enclosing receiver trips it.
        let c = ChannelParams::new(1e-9, 1e-6, 2e-6).unwrap();
        assert!(matches!(hit_prob(&c, c.peak_time()), Err(Error::ModelValidity { .. })));
    }

    #[test]
    fn rejects_non_positive_geometry() {
        assert!(ChannelParams::new(0.0, 1e-6, 1e-7).is_err());
        assert!(ChannelParams::new(1e-9, -1e-6, 1e-7).is_err());
    }

    #[test]
    fn occupancy_close_to_point_receiver_far_away() {
        let c = ChannelParams::new(1.14e-9, 25e-6, 0.5e-6).unwrap();
        let t = c.peak_time();
        let a = sphere_occupancy(&c, t);
        let b = hit_prob(&c, t).unwrap();
        assert!((a - b).abs() / b < 1e-3);
    }
}
