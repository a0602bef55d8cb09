//! Synthetic rotating radar over a world of reflective line segments.
//!
//! Each azimuth ray is cast from the sensor pose at the instant that azimuth is swept,
//! so sensor motion during a sweep is baked into the scan. The first segment hit leaves
//! a Gaussian power bump along the range axis; everything else is noise floor.


use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::filter::PolarScan;
use crate::geometry::{Pose2, Vec2};
use crate::io::TrajectoryEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
    pub reflectivity: f64,
}

impl Segment {
    /// Distance along the ray `origin + s·dir` (unit `dir`) to this segment, if hit.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        let edge = self.b - self.a;
        let denom = dir.cross(edge);
        if denom.abs() < 1e-15 {
            return None;
        }
        let w = self.a - origin;
        let s = w.cross(edge) / denom;
        let u = w.cross(dir) / denom;
        (s > 0.0 && (0.0..=1.0).contains(&u)).then_some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("segment {index} has zero length")]
    ZeroLength { index: usize },
    #[error("segment {index} reflectivity must lie in (0, 1]")]
    Reflectivity { index: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct World2D {
    segments: Vec<Segment>,
}

impl World2D {
    pub fn new(segments: Vec<Segment>) -> Result<Self, WorldError> {
        for (index, s) in segments.iter().enumerate() {
            if !(s.a.is_finite() && s.b.is_finite()) || s.a.distance(s.b) <= 0.0 {
                return Err(WorldError::ZeroLength { index });
            }
            if !(s.reflectivity > 0.0 && s.reflectivity <= 1.0) {
                return Err(WorldError::Reflectivity { index });
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Parses `x1 y1 x2 y2 reflectivity` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        let mut segments = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(WorldError::Parse {
                    line,
                    message: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let mut v = [0.0f64; 5];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| WorldError::Parse {
                    line,
                    message: format!("`{f}` is not a number"),
                })?;
            }
            let seg = Segment {
                a: Vec2::new(v[0], v[1]),
                b: Vec2::new(v[2], v[3]),
                reflectivity: v[4],
            };
            World2D::new(vec![seg]).map_err(|e| WorldError::Parse {
                line,
                message: e.to_string(),
            })?;
            segments.push(seg);
        }
        Ok(Self { segments })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# x1 y1 x2 y2 reflectivity\n");
        for s in &self.segments {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                s.a.x, s.a.y, s.b.x, s.b.y, s.reflectivity
            ));
        }
        out
    }

    /// First hit along a ray: `(distance, reflectivity)`.
    pub fn cast(&self, origin: Vec2, dir: Vec2) -> Option<(f64, f64)> {
        self.segments
            .iter()
            .filter_map(|s| s.ray_hit(origin, dir).map(|d| (d, s.reflectivity)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }
}

/// Sensor pose as a function of time.
pub trait Trajectory {
    fn pose_at(&self, t: f64) -> Pose2;
}

impl<F: Fn(f64) -> Pose2> Trajectory for F {
    fn pose_at(&self, t: f64) -> Pose2 {
        self(t)
    }
}

/// Motion at a constant body-frame twist `(vx, vy, ω)`, integrated exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTwist {
    pub start: Pose2,
    pub start_time: f64,
    pub twist: Pose2,
}

impl ConstantTwist {
    pub fn stationary(pose: Pose2) -> Self {
        Self {
            start: pose,
            start_time: 0.0,
            twist: Pose2::IDENTITY,
        }
    }

    pub fn straight(start: Pose2, speed: f64) -> Self {
        Self {
            start,
            start_time: 0.0,
            twist: Pose2::new(speed, 0.0, 0.0),
        }
    }
}

impl Trajectory for ConstantTwist {
    fn pose_at(&self, t: f64) -> Pose2 {
        let tau = t - self.start_time;
        let v = Vec2::new(self.twist.x, self.twist.y);
        let w = self.twist.theta;
        let angle = w * tau;
        let offset = if (w * tau).abs() < 1e-12 {
            v * tau
        } else {
            let (s, c) = angle.sin_cos();
            let a = s / w;
            let b = (1.0 - c) / w;
            Vec2::new(a * v.x - b * v.y, b * v.x + a * v.y)
        };
        self.start.compose(&Pose2::new(offset.x, offset.y, angle))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_azimuths: usize,
    pub num_bins: usize,
    pub range_resolution: f64,
    pub sweep_period: f64,
    pub noise_floor_mean: f64,
    pub noise_floor_sd: f64,
    pub peak_power: f64,
    /// Standard deviation of the return bump, in bins.
    pub peak_width: f64,
    pub rng_seed: u64,
    pub speckle_dropout_prob: f64,
}

impl Default for SimConfig {
    /// Geometry of a 4 Hz, 400-azimuth scanning radar with 3768 bins of 4.38 cm.
    fn default() -> Self {
        Self {
            num_azimuths: 400,
            num_bins: 3768,
            range_resolution: 0.0438,
            sweep_period: 0.25,
            noise_floor_mean: 0.0,
            noise_floor_sd: 0.0,
            peak_power: 100.0,
            peak_width: 2.0,
            rng_seed: 1,
            speckle_dropout_prob: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_azimuths == 0 || self.num_bins == 0 {
            return Err("azimuth and bin counts must be positive".into());
        }
        let positive = [
            ("range_resolution", self.range_resolution),
            ("sweep_period", self.sweep_period),
            ("peak_power", self.peak_power),
            ("peak_width", self.peak_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.noise_floor_mean >= 0.0 && self.noise_floor_sd >= 0.0) {
            return Err("noise floor parameters must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.speckle_dropout_prob) {
            return Err("speckle_dropout_prob must lie in [0, 1)".into());
        }
        Ok(())
    }

    fn rng_for_scan(&self, scan_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(scan_index);
        rng
    }
}

/// Renders one sweep starting at `start_time`. `scan_index` selects the random stream.
pub fn render_scan(
    world: &World2D,
    trajectory: &dyn Trajectory,
    start_time: f64,
    scan_index: u64,
    config: &SimConfig,
) -> PolarScan {
    let m = config.num_azimuths;
    let n = config.num_bins;
    let azimuths = PolarScan::uniform_azimuths(m);
    let mut rng = config.rng_for_scan(scan_index);
    let mut power = vec![0.0f32; m * n];

    if config.noise_floor_sd > 0.0 {
        let noise = Normal::new(config.noise_floor_mean, config.noise_floor_sd)
            .expect("validated noise parameters");
        for p in power.iter_mut() {
            *p = noise.sample(&mut rng) as f32;
        }
    } else if config.noise_floor_mean > 0.0 {
        power.fill(config.noise_floor_mean as f32);
    }

    let max_range = n as f64 * config.range_resolution;
    let reach = (4.0 * config.peak_width).ceil() as i64;
    for (i, &azimuth) in azimuths.iter().enumerate() {
        let t = start_time + config.sweep_period * i as f64 / m as f64;
        let pose = trajectory.pose_at(t);
        let dir = Vec2::from_polar(1.0, pose.theta + azimuth);
        // Draw unconditionally so the stream layout does not depend on the world.
        let dropped = rng.random::<f64>() < config.speckle_dropout_prob;
        let Some((range, reflectivity)) = world.cast(pose.translation(), dir) else {
            continue;
        };
        if dropped || range >= max_range {
            continue;
        }
        // Bin b is centered at (b + 0.5)·resolution.
        let center = range / config.range_resolution - 0.5;
        let height = config.peak_power * reflectivity;
        let row = &mut power[i * n..(i + 1) * n];
        let c = center.round() as i64;
        for b in (c - reach).max(0)..=(c + reach).min(n as i64 - 1) {
            let z = (b as f64 - center) / config.peak_width;
            row[b as usize] += (height * (-0.5 * z * z).exp()) as f32;
        }
    }
    for p in power.iter_mut() {
        *p = p.max(0.0);
    }

    PolarScan::new(
        start_time,
        config.sweep_period,
        config.range_resolution,
        azimuths,
        n,
        power,
    )
    .expect("simulator produces well-formed scans")
}

/// Renders `num_scans` back-to-back sweeps from `start_time`, with the ground-truth pose
/// sampled at each sweep end.
pub fn render_sequence(
    world: &World2D,
    trajectory: &dyn Trajectory,
    start_time: f64,
    num_scans: usize,
    config: &SimConfig,
) -> (Vec<PolarScan>, TrajectoryEstimate) {
    let mut scans = Vec::with_capacity(num_scans);
    let mut truth = TrajectoryEstimate::default();
    for j in 0..num_scans {
        let scan = render_scan(
            world,
            trajectory,
            start_time + j as f64 * config.sweep_period,
            j as u64,
            config,
        );
        let end = scan.end_time();
        truth
            .push(end, trajectory.pose_at(end))
            .expect("sweep end times increase");
        scans.push(scan);
    }
    (scans, truth)
}

/// Ready-made worlds used by tests, examples and the benchmark.
pub mod worlds {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment {
            a: Vec2::new(ax, ay),
            b: Vec2::new(bx, by),
            reflectivity: 1.0,
        }
    }

    /// Wall along `y = y0` from `x0` to `x1`, broken by rectangular bays that open away
    /// from the corridor (`outward` = ±1). Bay placement is drawn from `rng`.
    fn bayed_wall(rng: &mut ChaCha8Rng, x0: f64, x1: f64, y0: f64, outward: f64) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut x = x0;
        while x < x1 {
            let run = rng.random_range(3.0..7.0);
            let wall_end = (x + run).min(x1);
            out.push(seg(x, y0, wall_end, y0));
            x = wall_end;
            if x >= x1 {
                break;
            }
            let width = rng.random_range(1.5..3.5);
            let depth = rng.random_range(1.0..3.0) * outward;
            let bay_end = (x + width).min(x1);
            out.push(seg(x, y0, x, y0 + depth));
            out.push(seg(x, y0 + depth, bay_end, y0 + depth));
            out.push(seg(bay_end, y0 + depth, bay_end, y0));
            x = bay_end;
        }
        out
    }

    /// Straight corridor along +x of width `2·half_width`, with bays and corners on both
    /// walls and closed ends at `x = -10` and `x = length + 10`.
    pub fn corridor_with_corners(length: f64, half_width: f64, seed: u64) -> World2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x0, x1) = (-10.0, length + 10.0);
        let mut segments = bayed_wall(&mut rng, x0, x1, half_width, 1.0);
        segments.extend(bayed_wall(&mut rng, x0, x1, -half_width, -1.0));
        segments.push(seg(x0, -half_width, x0, half_width));
        segments.push(seg(x1, -half_width, x1, half_width));
        World2D::new(segments).expect("generated segments are valid")
    }

    /// Open area scattered with a few small rectangular blocks on both sides of the x axis.
    pub fn sparse_blocks(length: f64, seed: u64) -> World2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut segments = Vec::new();
        let mut x = -20.0;
        while x < length + 20.0 {
            for side in [-1.0, 1.0] {
                let w = rng.random_range(2.0..6.0);
                let h = rng.random_range(2.0..6.0);
                let offset = rng.random_range(6.0..20.0);
                let bx = x + rng.random_range(0.0..10.0);
                let (y_lo, y_hi) = if side > 0.0 {
                    (offset, offset + h)
                } else {
                    (-offset - h, -offset)
                };
                segments.push(seg(bx, y_lo, bx + w, y_lo));
                segments.push(seg(bx + w, y_lo, bx + w, y_hi));
                segments.push(seg(bx + w, y_hi, bx, y_hi));
                segments.push(seg(bx, y_hi, bx, y_lo));
            }
            x += rng.random_range(15.0..30.0);
        }
        World2D::new(segments).expect("generated segments are valid")
    }

    /// A closed room with an inner L-shaped partition; useful for rotation tests.
    pub fn room(half_size: f64) -> World2D {
        let h = half_size;
        World2D::new(vec![
            seg(-h, -h, h, -h),
            seg(h, -h, h, h),
            seg(h, h, -h, h),
            seg(-h, h, -h, -h),
            seg(0.3 * h, 0.2 * h, 0.7 * h, 0.2 * h),
            seg(0.3 * h, 0.2 * h, 0.3 * h, 0.6 * h),
            seg(-0.6 * h, -0.5 * h, -0.2 * h, -0.7 * h),
        ])
        .expect("room segments are valid")
    }
}
