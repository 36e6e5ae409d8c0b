//! Batch front end for the `levy-fpe` solver: TOML run configs, figure
//! presets, experiment orchestration, manifests and gnuplot scripts.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plots;
pub mod presets;

pub use config::{parse_config, to_toml, ConfigError, ExperimentKind, RunConfig};
pub use experiments::{run_experiment, RunOutcome};

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "LEVY_FPE_WORKERS";

/// Worker count requested through [`WORKERS_ENV`], if set.
pub fn workers_from_env() -> anyhow::Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => anyhow::bail!("{WORKERS_ENV} must be a positive integer, got `{v}`"),
        },
    }
}
