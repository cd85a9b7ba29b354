//! Scenario configuration and CSV output for the `kerr-echo` tool.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{parse_config, ConfigError, ScenarioConfig};
pub use runner::{run_scenario, simulate, RunError, ScenarioResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "KERR_ECHO_THREADS";

/// Configures the global thread pool from [`THREADS_ENV`], if set.
pub fn init_thread_pool() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
