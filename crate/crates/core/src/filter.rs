//! Polar sweeps and the per-azimuth k-strongest filter.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("scan has no azimuths")]
    NoAzimuths,
    #[error("scan has no range bins")]
    NoBins,
    #[error("power grid holds {actual} values, expected {expected}")]
    PowerShape { expected: usize, actual: usize },
    #[error("power at azimuth {azimuth}, bin {bin} is negative or not finite")]
    InvalidPower { azimuth: usize, bin: usize },
    #[error("azimuth angles must be finite, non-decreasing and span at most 2π")]
    InvalidAzimuths,
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("timestamp is not finite")]
    InvalidTimestamp,
}

/// One sweep of a rotating radar: `m` azimuth rows of `n` range bins each.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarScan {
    timestamp: f64,
    sweep_period: f64,
    range_resolution: f64,
    azimuths: Vec<f64>,
    num_bins: usize,
    power: Vec<f32>,
}

impl PolarScan {
    /// `power` is row-major, one row of `num_bins` values per entry of `azimuths`.
    /// `timestamp` marks the start of the sweep.
    pub fn new(
        timestamp: f64,
        sweep_period: f64,
        range_resolution: f64,
        azimuths: Vec<f64>,
        num_bins: usize,
        power: Vec<f32>,
    ) -> Result<Self, ScanError> {
        if !timestamp.is_finite() {
            return Err(ScanError::InvalidTimestamp);
        }
        if !(sweep_period > 0.0 && sweep_period.is_finite()) {
            return Err(ScanError::NonPositive("sweep period"));
        }
        if !(range_resolution > 0.0 && range_resolution.is_finite()) {
            return Err(ScanError::NonPositive("range resolution"));
        }
        if azimuths.is_empty() {
            return Err(ScanError::NoAzimuths);
        }
        if num_bins == 0 {
            return Err(ScanError::NoBins);
        }
        let expected = azimuths.len() * num_bins;
        if power.len() != expected {
            return Err(ScanError::PowerShape {
                expected,
                actual: power.len(),
            });
        }
        let monotone = azimuths.iter().all(|a| a.is_finite())
            && azimuths.windows(2).all(|w| w[1] >= w[0])
            && azimuths[azimuths.len() - 1] - azimuths[0] <= TAU + 1e-9;
        if !monotone {
            return Err(ScanError::InvalidAzimuths);
        }
        if let Some(i) = power.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ScanError::InvalidPower {
                azimuth: i / num_bins,
                bin: i % num_bins,
            });
        }
        Ok(Self {
            timestamp,
            sweep_period,
            range_resolution,
            azimuths,
            num_bins,
            power,
        })
    }

    /// Evenly spaced azimuths `2π·i/m` starting at zero.
    pub fn uniform_azimuths(m: usize) -> Vec<f64> {
        (0..m).map(|i| TAU * i as f64 / m as f64).collect()
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    /// Time at which the last azimuth of the sweep has been recorded.
    pub fn end_time(&self) -> f64 {
        self.timestamp + self.sweep_period
    }

    pub fn sweep_period(&self) -> f64 {
        self.sweep_period
    }

    pub fn range_resolution(&self) -> f64 {
        self.range_resolution
    }

    pub fn num_azimuths(&self) -> usize {
        self.azimuths.len()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.azimuths
    }

    pub fn azimuth_angle(&self, i: usize) -> f64 {
        self.azimuths[i]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.power[i * self.num_bins..(i + 1) * self.num_bins]
    }

    pub fn power(&self) -> &[f32] {
        &self.power
    }

    /// Range of the center of bin `bin`.
    pub fn bin_range(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.range_resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    /// Maximum number of returns kept per azimuth.
    pub k: usize,
    /// Returns must be strictly above this level.
    pub z_min: f64,
    /// Optional per-bin noise level. Where present it raises the threshold of that bin
    /// above `z_min`; bins past its end use `z_min`.
    pub noise_profile: Option<Vec<f64>>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            k: 12,
            z_min: 60.0,
            noise_profile: None,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if !(self.z_min >= 0.0 && self.z_min.is_finite()) {
            return Err("z_min must be finite and non-negative".into());
        }
        if let Some(profile) = &self.noise_profile {
            if profile.iter().any(|v| !v.is_finite()) {
                return Err("noise profile must be finite".into());
            }
        }
        Ok(())
    }

    pub fn threshold(&self, bin: usize) -> f64 {
        match self.noise_profile.as_ref().and_then(|p| p.get(bin)) {
            Some(&level) => level.max(self.z_min),
            None => self.z_min,
        }
    }
}

/// A kept return. `position` is in the sensor frame and stays at the origin until
/// [`polar_to_cartesian`] has run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPoint {
    pub position: Vec2,
    pub power: f64,
    pub azimuth_index: usize,
    pub bin: usize,
    /// Seconds since the start of the sweep, in `[0, sweep_period)`.
    pub relative_time: f64,
}

/// Keeps, for every azimuth, the (at most) `k` strongest bins whose power exceeds the
/// noise threshold. Equal powers rank the closer bin first. Output is ordered by
/// azimuth, then bin.
pub fn k_strongest(scan: &PolarScan, params: &FilterParams) -> Vec<RadarPoint> {
    let k = params.k;
    if k == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    // Candidates sorted strongest first; ties by ascending bin.
    let mut best: Vec<(f32, usize)> = Vec::with_capacity(k + 1);
    for az in 0..scan.num_azimuths() {
        best.clear();
        let row = scan.row(az);
        match &params.noise_profile {
            None => {
                let z_min = params.z_min;
                for (bin, &p) in row.iter().enumerate() {
                    if (p as f64) > z_min {
                        push_bounded(&mut best, k, p, bin);
                    }
                }
            }
            Some(_) => {
                for (bin, &p) in row.iter().enumerate() {
                    if (p as f64) > params.threshold(bin) {
                        push_bounded(&mut best, k, p, bin);
                    }
                }
            }
        }
        best.sort_unstable_by_key(|&(_, bin)| bin);
        out.extend(best.iter().map(|&(p, bin)| RadarPoint {
            position: Vec2::ZERO,
            power: p as f64,
            azimuth_index: az,
            bin,
            relative_time: 0.0,
        }));
    }
    out
}

/// Bins arrive in ascending order, so a later bin never beats an earlier one of equal power.
#[inline]
fn push_bounded(best: &mut Vec<(f32, usize)>, k: usize, p: f32, bin: usize) {
    if best.len() == k {
        if p <= best[k - 1].0 {
            return;
        }
        best.pop();
    }
    let at = best.partition_point(|&(q, _)| q >= p);
    best.insert(at, (p, bin));
}

/// Places every point at the center of its range bin along its azimuth and stamps its
/// time within the sweep, assuming uniform rotation.
pub fn polar_to_cartesian(points: &[RadarPoint], scan: &PolarScan) -> Vec<RadarPoint> {
    let m = scan.num_azimuths() as f64;
    points
        .iter()
        .map(|p| {
            let angle = scan.azimuth_angle(p.azimuth_index);
            RadarPoint {
                position: Vec2::from_polar(scan.bin_range(p.bin), angle),
                relative_time: scan.sweep_period() * p.azimuth_index as f64 / m,
                ..*p
            }
        })
        .collect()
}
