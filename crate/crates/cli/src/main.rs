mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use error::{CliError, Result};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "dmc-cpns", version = output::VERSION, about = "Molecular communication link analysis under compound Poisson noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; .csv or .json. Defaults to CSV on stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Simulation seed (overrides simulate.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config key, e.g. --set cpns.event_rate_per_s=5.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Noise count pmf for one or more models.
    Dist,
    /// BER against the threshold.
    BerCurve,
    /// Optimal BER while one parameter varies.
    Sweep,
    /// Particle-based or Monte Carlo BER estimate.
    Simulate,
    /// Analysis, homogeneous-Poisson baseline and simulation side by side.
    Compare,
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let a = cli.run;
    if let Some(n) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let path = a.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let mut overrides = a.overrides;
    if let Some(s) = a.seed {
        overrides.push(format!("simulate.seed={s}"));
    }
    let cfg = config::load(&text, &overrides).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        e => e,
    })?;
    output::format_of(a.out.as_deref())?;
    let out = a.out.as_deref();
    let t = || start.elapsed().as_secs_f64();
    match cli.command {
        Command::Dist => commands::dist(&cfg)?.write(out, t()),
        Command::BerCurve => commands::ber_curve(&cfg)?.write(out, t()),
        Command::Sweep => commands::sweep(&cfg)?.write(out, t()),
        Command::Simulate => commands::simulate(&cfg)?.write(out, t()),
        Command::Compare => commands::compare(&cfg)?.write(out, t()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::FAILURE
        }
    }
}
