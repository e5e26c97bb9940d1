//! Analysis and simulation of diffusion-based molecular communication links
//! corrupted by a compound Poisson noise source (CPNS).

pub mod channel;
pub mod cpnsdist;
pub mod detector;
pub mod error;
pub mod highrate;
pub mod pmf;
pub mod quad;
pub mod simulate;
pub mod special;

pub use channel::ChannelParams;
pub use cpnsdist::{CpnsParams, RareEventGrid};
pub use detector::{DetectorSpec, LinkAnalysis, NoiseModel, SystemConfig};
pub use error::{Error, Result};
pub use pmf::{Pmf, PoissonMixture};
