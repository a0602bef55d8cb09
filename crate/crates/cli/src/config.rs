//! Run configuration: built-in defaults, then an optional `key = value` file, then flags.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use radar_odom::sim::SimConfig;
use radar_odom::{OdometryParams, TrajectoryFormat};

use crate::CliError;

/// Every key accepted in a config file. Flags use the same names with `-` for `_`.
pub const KEYS: &[&str] = &[
    "k",
    "z_min",
    "resolution",
    "min_neighbors",
    "isotropy_reject_ratio",
    "metric",
    "max_iterations",
    "huber_delta",
    "min_correspondences",
    "keyframe_distance",
    "motion_compensation",
    "seed",
    "num_azimuths",
    "num_bins",
    "range_resolution",
    "sweep_period",
    "noise_floor_mean",
    "noise_floor_sd",
    "peak_power",
    "peak_width",
    "speckle_dropout_prob",
    "format",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub odometry: OdometryParams,
    /// Used by `simulate`; its `rng_seed` doubles as the run seed.
    pub sim: SimConfig,
    pub format: TrajectoryFormat,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            odometry: OdometryParams::default(),
            sim: SimConfig::default(),
            format: TrajectoryFormat::Native,
            output: PathBuf::from("."),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("invalid value `{value}` for `{key}`: {e}"))
}

pub fn parse_format(value: &str) -> Result<TrajectoryFormat, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "native" => Ok(TrajectoryFormat::Native),
        "kitti" => Ok(TrajectoryFormat::Kitti),
        other => Err(format!("unknown format `{other}` (expected native or kitti)")),
    }
}

impl RunConfig {
    /// Applies one setting. Values are checked for type here and for range in
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let o = &mut self.odometry;
        let s = &mut self.sim;
        match key {
            "k" => o.filter.k = parse(key, value)?,
            "z_min" => o.filter.z_min = parse(key, value)?,
            "resolution" => {
                let r: f64 = parse(key, value)?;
                *o = std::mem::take(o).with_resolution(r);
            }
            "min_neighbors" => o.surface.min_neighbors = parse(key, value)?,
            "isotropy_reject_ratio" => o.surface.isotropy_reject_ratio = parse(key, value)?,
            "metric" => o.registration.metric = parse(key, value)?,
            "max_iterations" => o.registration.max_iterations = parse(key, value)?,
            "huber_delta" => o.registration.huber_delta = parse(key, value)?,
            "min_correspondences" => o.registration.min_correspondences = parse(key, value)?,
            "keyframe_distance" => o.keyframe_distance = parse(key, value)?,
            "motion_compensation" => o.motion_compensation = parse(key, value)?,
            "seed" => s.rng_seed = parse(key, value)?,
            "num_azimuths" => s.num_azimuths = parse(key, value)?,
            "num_bins" => s.num_bins = parse(key, value)?,
            "range_resolution" => s.range_resolution = parse(key, value)?,
            "sweep_period" => s.sweep_period = parse(key, value)?,
            "noise_floor_mean" => s.noise_floor_mean = parse(key, value)?,
            "noise_floor_sd" => s.noise_floor_sd = parse(key, value)?,
            "peak_power" => s.peak_power = parse(key, value)?,
            "peak_width" => s.peak_width = parse(key, value)?,
            "speckle_dropout_prob" => s.speckle_dropout_prob = parse(key, value)?,
            "format" => self.format = parse_format(value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Current value of `key` in the same textual form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        let o = &self.odometry;
        let s = &self.sim;
        Some(match key {
            "k" => o.filter.k.to_string(),
            "z_min" => o.filter.z_min.to_string(),
            "resolution" => o.surface.resolution.to_string(),
            "min_neighbors" => o.surface.min_neighbors.to_string(),
            "isotropy_reject_ratio" => o.surface.isotropy_reject_ratio.to_string(),
            "metric" => o.registration.metric.to_string(),
            "max_iterations" => o.registration.max_iterations.to_string(),
            "huber_delta" => o.registration.huber_delta.to_string(),
            "min_correspondences" => o.registration.min_correspondences.to_string(),
            "keyframe_distance" => o.keyframe_distance.to_string(),
            "motion_compensation" => o.motion_compensation.to_string(),
            "seed" => s.rng_seed.to_string(),
            "num_azimuths" => s.num_azimuths.to_string(),
            "num_bins" => s.num_bins.to_string(),
            "range_resolution" => s.range_resolution.to_string(),
            "sweep_period" => s.sweep_period.to_string(),
            "noise_floor_mean" => s.noise_floor_mean.to_string(),
            "noise_floor_sd" => s.noise_floor_sd.to_string(),
            "peak_power" => s.peak_power.to_string(),
            "peak_width" => s.peak_width.to_string(),
            "speckle_dropout_prob" => s.speckle_dropout_prob.to_string(),
            "format" => match self.format {
                TrajectoryFormat::Native => "native".into(),
                TrajectoryFormat::Kitti => "kitti".into(),
            },
            "output" => self.output.display().to_string(),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        self.odometry.validate()?;
        self.sim.validate()
    }

    /// Defaults, overridden by `file` entries, overridden by `flags`; then validated.
    pub fn resolve(file: Option<&str>, flags: &[(&str, String)]) -> Result<Self, CliError> {
        let mut config = Self::default();
        if let Some(text) = file {
            for (line, key, value) in parse_config_text(text)? {
                config
                    .set(&key, &value)
                    .map_err(|e| CliError::Config(format!("config line {line}: {e}")))?;
            }
        }
        for (key, value) in flags {
            config
                .set(key, value)
                .map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
        config.validate().map_err(CliError::Config)?;
        Ok(config)
    }
}

/// Splits `key = value` lines. Blank lines and `#` comments are skipped; keys are
/// checked against [`KEYS`].
pub fn parse_config_text(text: &str) -> Result<Vec<(usize, String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {line}: expected `key = value`"
            )));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config line {line}: unknown key `{key}`"
            )));
        }
        out.push((line, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}
