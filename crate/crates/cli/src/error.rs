use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("override `{0}`: {1}")]
    Override(String, String),

    #[error("{0}")]
    Core(#[from] dmc_cpns::Error),

    #[error("unsupported output extension `{0}` (use .csv or .json)")]
    OutputFormat(String),

    #[error("{0}: {1}")]
    Io(String, std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// What to change when the requested regime cannot be computed.
    pub fn hint(&self) -> Option<&'static str> {
        use dmc_cpns::Error as E;
        match self {
            CliError::Core(E::EnumerationTooLarge { .. }) => Some(
                "the high-rate likelihood enumerates 2^k_T interference patterns; \
                 set transmitter.memory_slots to 20 or less, or use a rare_event model",
            ),
            CliError::Core(E::RareEventViolated(_)) => {
                Some("choose noise.interval_s well below 1 / cpns.event_rate_per_s")
            }
            CliError::Core(E::Infeasible(_)) => {
                Some("the exact-integral oracle only covers small lambda_e K; use rare_event_approx or high_rate")
            }
            CliError::Core(E::TailTolerance { .. }) => Some("raise dist.k_max or loosen dist.tail_tol"),
            CliError::Core(E::PopulationCap { .. }) => Some(
                "reduce transmitter.molecules or cpns.amplitude, use simulate.pbs_mode = \"thinned\", \
                 or switch to simulate.method = \"mc\"",
            ),
            CliError::Core(E::ModelValidity { .. }) => {
                Some("the point-receiver model needs the sample time well after the receiver is reached; move link.sample_time_s later")
            }
            _ => None,
        }
    }
}
