//! CSV and JSON writers. Both embed the version and the resolved config.

use crate::config::FileConfig;
use crate::error::{CliError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const VERSION: &str = env!("DMC_CPNS_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Format from the output extension; stdout gets CSV.
pub fn format_of(out: Option<&Path>) -> Result<Format> {
    let Some(p) = out else { return Ok(Format::Csv) };
    match p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        other => Err(CliError::OutputFormat(other.unwrap_or("").to_string())),
    }
}

/// SHA-256 of the config's canonical JSON.
pub fn config_hash(cfg: &FileConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tabular result with an optional JSON-only payload.
pub struct Report<R> {
    pub command: &'static str,
    pub config: FileConfig,
    pub seed: Option<u64>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub result: R,
}

#[derive(Serialize)]
struct Envelope<'a, R> {
    version: &'static str,
    command: &'static str,
    config: &'a FileConfig,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(flatten)]
    result: &'a R,
    wall_time_s: f64,
}

fn open(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(p.display().to_string(), e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

impl<R: Serialize> Report<R> {
    pub fn write(&self, out: Option<&Path>, wall_time_s: f64) -> Result<()> {
        let io_err = |e| CliError::Io(out.map_or("stdout".into(), |p| p.display().to_string()), e);
        let mut w = open(out)?;
        match format_of(out)? {
            Format::Json => {
                let env = Envelope {
                    version: VERSION,
                    command: self.command,
                    config: &self.config,
                    config_hash: config_hash(&self.config),
                    seed: self.seed,
                    result: &self.result,
                    wall_time_s,
                };
                serde_json::to_writer_pretty(&mut w, &env)?;
                writeln!(w).map_err(io_err)?;
            }
            Format::Csv => {
                writeln!(w, "# dmc-cpns {VERSION}").map_err(io_err)?;
                writeln!(w, "# command: {}", self.command).map_err(io_err)?;
                writeln!(w, "# config_hash: {}", config_hash(&self.config)).map_err(io_err)?;
                if let Some(s) = self.seed {
                    writeln!(w, "# seed: {s}").map_err(io_err)?;
                }
                writeln!(w, "# wall_time_s: {wall_time_s}").map_err(io_err)?;
                writeln!(w, "# config:").map_err(io_err)?;
                for line in self.config.to_toml().lines() {
                    writeln!(w, "#   {line}").map_err(io_err)?;
                }
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(&self.columns)?;
                for r in &self.rows {
                    csv.write_record(r)?;
                }
                csv.flush().map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)
    }
}

/// Float formatting that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
