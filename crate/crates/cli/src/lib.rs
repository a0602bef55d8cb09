//! Command-line front end for the radar odometry library.

pub mod commands;
pub mod config;

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or malformed input files, or a run that produced nothing usable.
    Input(String),
    /// Invalid flags, config file entries or environment.
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Config(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Applies `RADAR_ODOM_THREADS` to the global rayon pool.
pub fn init_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(value) = value else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Config(format!("RADAR_ODOM_THREADS must be a positive integer, got `{value}`"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
