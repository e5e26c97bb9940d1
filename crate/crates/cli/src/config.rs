//! Run configuration: TOML schema, overrides and resolution.
//!
//! Every physical quantity carries its unit in the key name. Optional keys
//! that have derived defaults (memory slots, sample time, matched noise
//! mean) are filled in by [`FileConfig::resolve`], so the echoed config
//! re-parses to the same system.

use crate::error::{CliError, Result};
use dmc_cpns::cpnsdist::cpns_mean;
use dmc_cpns::detector::{memory_slots, peak_sample_time, ThresholdSearch};
use dmc_cpns::simulate::{PbsMode, Retirement};
use dmc_cpns::{ChannelParams, CpnsParams, NoiseModel, SystemConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

const UM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub link: LinkSection,
    pub transmitter: TransmitterSection,
    pub cpns: CpnsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub dist: DistSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub diffusion_m2_per_s: f64,
    pub receiver_radius_um: f64,
    pub slot_s: f64,
    /// Seconds into the slot, or "slot_end" / "peak". Default: slot end.
    #[serde(default)]
    pub sample_time_s: SampleTime,
    /// Reception ratio used for derived memory lengths.
    #[serde(default = "default_rho")]
    pub memory_ratio: f64,
}

fn default_rho() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleTime {
    Seconds(f64),
    Named(SampleTimeName),
}

impl Default for SampleTime {
    fn default() -> Self {
        SampleTime::Named(SampleTimeName::SlotEnd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleTimeName {
    SlotEnd,
    Peak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterSection {
    pub distance_um: f64,
    pub molecules: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_slots: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpnsSection {
    pub distance_um: f64,
    pub event_rate_per_s: f64,
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_slots: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    None,
    HomogeneousPoisson,
    RareEventApprox,
    RareEventExact,
    HighRate,
    /// Direct integral oracle; only for `dist`.
    ExactIntegral,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::None => "none",
            ModelName::HomogeneousPoisson => "homogeneous_poisson",
            ModelName::RareEventApprox => "rare_event_approx",
            ModelName::RareEventExact => "rare_event_exact",
            ModelName::HighRate => "high_rate",
            ModelName::ExactIntegral => "exact_integral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub model: ModelName,
    /// Rare-event sub-interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_s: Option<f64>,
    /// Homogeneous mean; defaults to the CPNS mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            model: ModelName::RareEventApprox,
            interval_s: None,
            mean: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Single optimal threshold.
    Std,
    /// Maximum-likelihood decision regions.
    Mtd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    pub search: ThresholdSearch,
    /// Fixed threshold; skips the optimization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<usize>,
    /// Largest threshold on BER curves; defaults to the likelihood support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_max: Option<usize>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            kind: DetectorKind::Std,
            search: ThresholdSearch::Bisection,
            zeta: None,
            zeta_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Pbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub method: Method,
    pub n_bits: usize,
    pub seed: u64,
    pub dt_s: f64,
    pub pbs_mode: PbsMode,
    pub retirement: Retirement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_slots: Option<usize>,
    pub population_cap: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            method: Method::Mc,
            n_bits: 100_000,
            seed: 1,
            dt_s: 1e-3,
            pbs_mode: PbsMode::Thinned,
            retirement: Retirement::Uniform,
            warmup_slots: None,
            population_cap: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistSection {
    /// Models to tabulate; empty means `noise.model`.
    #[serde(default)]
    pub models: Vec<ModelName>,
    pub tail_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

impl Default for DistSection {
    fn default() -> Self {
        Self {
            models: Vec::new(),
            tail_tol: 1e-10,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted key, e.g. `cpns.event_rate_per_s`.
    pub parameter: String,
    pub values: Vec<f64>,
    /// Divide each value by the event rate (for `noise.interval_s`).
    #[serde(default)]
    pub per_event_rate: bool,
}

/// Parses a config file, applying `--set` overrides.
///
/// The file is first checked on its own so schema errors carry its line
/// numbers; overrides are then applied to the parsed table.
pub fn load(text: &str, overrides: &[String]) -> Result<FileConfig> {
    let _: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let mut table: Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Override(o.clone(), "expected key=value".into()))?;
        set_key(&mut table, key.trim(), parse_value(value.trim()))
            .map_err(|m| CliError::Override(o.clone(), m))?;
    }
    from_table(table, || format!("after applying {}", overrides.join(", ")))
}

pub fn from_table(table: Table, context: impl Fn() -> String) -> Result<FileConfig> {
    FileConfig::deserialize(Value::Table(table)).map_err(|e| CliError::Config(format!("{}: {e}", context())))
}

/// TOML literal if it parses as one, otherwise a bare string.
pub fn parse_value(s: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {s}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(s.to_string()))
}

/// Sets `section.key` (any depth) in `table`.
pub fn set_key(table: &mut Table, key: &str, value: Value) -> std::result::Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("malformed key `{key}`"));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("`{p}` is not a section"))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl FileConfig {
    pub fn to_table(&self) -> Table {
        Table::try_from(self).expect("config serializes to a table")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    fn transmitter_channel(&self) -> Result<ChannelParams> {
        Ok(ChannelParams::new(
            self.link.diffusion_m2_per_s,
            self.transmitter.distance_um * UM,
            self.link.receiver_radius_um * UM,
        )?)
    }

    fn cpns_channel(&self) -> Result<ChannelParams> {
        Ok(ChannelParams::new(
            self.link.diffusion_m2_per_s,
            self.cpns.distance_um * UM,
            self.link.receiver_radius_um * UM,
        )?)
    }

    /// Fills every derived default with its value.
    pub fn resolve(&self) -> Result<FileConfig> {
        let mut r = self.clone();
        let slot = self.link.slot_s;
        let rho = self.link.memory_ratio;
        let tx = self.transmitter_channel()?;
        let cc = self.cpns_channel()?;
        if r.transmitter.memory_slots.is_none() {
            r.transmitter.memory_slots = Some(memory_slots(&tx, slot, rho)?);
        }
        if r.cpns.memory_slots.is_none() {
            r.cpns.memory_slots = Some(memory_slots(&cc, slot, rho)?);
        }
        r.link.sample_time_s = SampleTime::Seconds(match self.link.sample_time_s {
            SampleTime::Seconds(t) => t,
            SampleTime::Named(SampleTimeName::SlotEnd) => slot,
            SampleTime::Named(SampleTimeName::Peak) => peak_sample_time(&tx, slot),
        });
        if self.noise.model == ModelName::HomogeneousPoisson && r.noise.mean.is_none() {
            r.noise.mean = Some(cpns_mean(&r.cpns_params()?)?);
        }
        Ok(r)
    }

    fn cpns_params(&self) -> Result<CpnsParams> {
        let memory_slots = self
            .cpns
            .memory_slots
            .ok_or_else(|| CliError::Config("cpns.memory_slots unresolved".into()))?;
        Ok(CpnsParams {
            channel: self.cpns_channel()?,
            event_rate: self.cpns.event_rate_per_s,
            amplitude: self.cpns.amplitude,
            memory_slots,
            slot: self.link.slot_s,
        })
    }

    /// Noise model named `model` with this config's parameters.
    pub fn noise_model(&self, model: ModelName) -> Result<NoiseModel> {
        let interval = || {
            self.noise.interval_s.ok_or_else(|| {
                CliError::Config(format!("noise.interval_s is required for {}", model.as_str()))
            })
        };
        Ok(match model {
            ModelName::None => NoiseModel::None,
            ModelName::HomogeneousPoisson => NoiseModel::HomogeneousPoisson {
                mean: match self.noise.mean {
                    Some(m) => m,
                    None => cpns_mean(&self.cpns_params()?)?,
                },
            },
            ModelName::RareEventApprox => NoiseModel::RareEventApprox { interval: interval()? },
            ModelName::RareEventExact => NoiseModel::RareEventExact { interval: interval()? },
            ModelName::HighRate => NoiseModel::HighRate,
            ModelName::ExactIntegral => {
                return Err(CliError::Config(
                    "exact_integral is a distribution oracle; use it under dist.models only".into(),
                ))
            }
        })
    }

    /// System of an already resolved config, with the given noise model.
    pub fn system_with(&self, model: ModelName) -> Result<SystemConfig> {
        let sample_time = match self.link.sample_time_s {
            SampleTime::Seconds(t) => t,
            SampleTime::Named(_) => return Err(CliError::Config("link.sample_time_s unresolved".into())),
        };
        let cfg = SystemConfig {
            transmitter: self.transmitter_channel()?,
            molecules: self.transmitter.molecules,
            tx_memory_slots: self
                .transmitter
                .memory_slots
                .ok_or_else(|| CliError::Config("transmitter.memory_slots unresolved".into()))?,
            cpns: self.cpns_params()?,
            sample_time,
            noise: self.noise_model(model)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn system(&self) -> Result<SystemConfig> {
        self.system_with(self.noise.model)
    }

    pub fn cpns(&self) -> Result<CpnsParams> {
        self.cpns_params()
    }
}
