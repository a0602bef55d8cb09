//! Incremental scan-to-keyframe odometry.
//!
//! Per scan: k-strongest filter, Cartesian conversion, motion compensation with the
//! previous velocity, surface points, registration against the keyframe nearest to the
//! constant-velocity prediction, velocity update, keyframe policy.
//!
//! Poses are global and stamped at the end of each sweep. The velocity is the
//! component-wise pose difference over time, in the global frame; it is rotated into
//! the body frame before it is used for motion compensation.
//!
//! The first keyframe is built before any velocity is known, so it cannot be compensated.
//! Its filtered points are kept and the keyframe is rebuilt with the first velocity
//! estimate; otherwise every later compensated scan would be matched against a smeared
//! reference whenever the sequence starts in motion.

use std::time::Instant;

use thiserror::Error;

use crate::filter::{k_strongest, polar_to_cartesian, FilterParams, PolarScan, RadarPoint};
use crate::geometry::{normalize_angle, Pose2, Vec2};
use crate::io::TrajectoryEstimate;
use crate::registration::{register, RegistrationError, RegistrationParams};
use crate::surface::{build_surface_points, motion_compensate, SurfaceParams, SurfacePointSet};

#[derive(Debug, Clone, PartialEq)]
pub struct OdometryParams {
    pub filter: FilterParams,
    pub surface: SurfaceParams,
    pub registration: RegistrationParams,
    /// A new keyframe is created once the sensor is farther than this from the active one.
    pub keyframe_distance: f64,
    pub motion_compensation: bool,
}

impl Default for OdometryParams {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            surface: SurfaceParams::default(),
            registration: RegistrationParams::default(),
            keyframe_distance: 1.5,
            motion_compensation: true,
        }
    }
}

impl OdometryParams {
    /// Sets both the surface neighborhood radius and the association radius to `r`.
    pub fn with_resolution(mut self, r: f64) -> Self {
        self.surface.resolution = r;
        self.registration.association_radius = r;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.filter.validate()?;
        self.surface.validate()?;
        self.registration.validate()?;
        if !(self.keyframe_distance > 0.0 && self.keyframe_distance.is_finite()) {
            return Err("keyframe_distance must be positive and finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Keyframe {
    pub set: SurfacePointSet,
    pub global_pose: Pose2,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OdometryState {
    pub current_pose: Pose2,
    pub previous_pose: Pose2,
    /// Global-frame rates `(ẋ, ẏ, θ̇)`.
    pub velocity: Pose2,
    pub keyframes: Vec<Keyframe>,
    pub last_timestamp: Option<f64>,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDiagnostics {
    pub frame: usize,
    pub timestamp: f64,
    pub stage_filter_ms: f64,
    pub stage_surface_ms: f64,
    pub stage_register_ms: f64,
    pub total_ms: f64,
    pub filtered_points: usize,
    pub surface_points: usize,
    pub iterations: usize,
    pub correspondences: usize,
    pub converged: bool,
    /// Keyframe registered against; for a frame that creates the first keyframe, that one.
    pub keyframe_id: Option<usize>,
    pub new_keyframe: bool,
    /// Set when registration failed and the pose was dead-reckoned.
    pub registration_error: Option<RegistrationError>,
}

impl FrameDiagnostics {
    pub fn registration_failed(&self) -> bool {
        self.registration_error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub timestamp: f64,
    pub pose: Pose2,
    pub diagnostics: FrameDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdometryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scan ending at {timestamp} does not follow the previous scan ending at {previous}")]
    NonMonotonicTimestamp { timestamp: f64, previous: f64 },
}

/// Component-wise `(x_t − x_prev) / dt`, with the angle difference taken the short way.
pub fn update_velocity(current: &Pose2, previous: &Pose2, dt: f64) -> Pose2 {
    let d = current.minus(previous);
    Pose2 {
        x: d.x / dt,
        y: d.y / dt,
        theta: normalize_angle(current.theta - previous.theta) / dt,
    }
}

/// Index of the keyframe whose position is closest to `predicted`; ties go to the most
/// recent keyframe. `None` for an empty list.
pub fn select_keyframe(keyframes: &[Keyframe], predicted: &Pose2) -> Option<usize> {
    let p = predicted.translation();
    let mut best: Option<(usize, f64)> = None;
    for (i, kf) in keyframes.iter().enumerate() {
        let d = kf.global_pose.translation().distance(p);
        if best.is_none_or(|(_, bd)| d <= bd) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}

/// Global-frame rates expressed in the body frame of a sensor with heading `theta`.
fn body_velocity(velocity: &Pose2, theta: f64) -> Pose2 {
    let linear = Vec2::new(velocity.x, velocity.y).rotated(-theta);
    Pose2 {
        x: linear.x,
        y: linear.y,
        theta: velocity.theta,
    }
}

fn elapsed_ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone)]
pub struct Odometry {
    params: OdometryParams,
    state: OdometryState,
    /// Uncompensated points and sweep period of the first keyframe, until it is rebuilt.
    pending_first: Option<(Vec<RadarPoint>, f64)>,
}

impl Odometry {
    pub fn new(params: OdometryParams) -> Result<Self, OdometryError> {
        params.validate().map_err(OdometryError::InvalidParams)?;
        Ok(Self {
            params,
            state: OdometryState::default(),
            pending_first: None,
        })
    }

    pub fn params(&self) -> &OdometryParams {
        &self.params
    }

    pub fn state(&self) -> &OdometryState {
        &self.state
    }

    /// Runs one scan through the pipeline. Registration failures do not abort: the frame
    /// keeps the constant-velocity prediction and carries the error in its diagnostics.
    pub fn process_scan(&mut self, scan: &PolarScan) -> Result<FrameOutput, OdometryError> {
        let total_start = Instant::now();
        let timestamp = scan.end_time();
        let dt = match self.state.last_timestamp {
            Some(previous) if !(timestamp > previous) => {
                return Err(OdometryError::NonMonotonicTimestamp {
                    timestamp,
                    previous,
                })
            }
            Some(previous) => Some(timestamp - previous),
            None => None,
        };
        let mut diag = FrameDiagnostics {
            frame: self.state.frames,
            timestamp,
            ..FrameDiagnostics::default()
        };

        let t = Instant::now();
        let points = polar_to_cartesian(&k_strongest(scan, &self.params.filter), scan);
        diag.stage_filter_ms = elapsed_ms(t);
        diag.filtered_points = points.len();

        let t = Instant::now();
        let velocity = if self.params.motion_compensation {
            body_velocity(&self.state.velocity, self.state.current_pose.theta)
        } else {
            Pose2::IDENTITY
        };
        let raw = (self.state.keyframes.is_empty() && self.params.motion_compensation)
            .then(|| points.clone());
        let points = motion_compensate(&points, &velocity, scan.sweep_period());
        let mut set = build_surface_points(&points, &self.params.surface);
        diag.stage_surface_ms = elapsed_ms(t);
        diag.surface_points = set.len();

        let t = Instant::now();
        let predicted = match dt {
            Some(dt) => self.state.current_pose.plus(&self.state.velocity.scaled(dt)),
            None => Pose2::IDENTITY,
        };
        let mut pose = predicted;
        let mut registered = false;
        let active = select_keyframe(&self.state.keyframes, &predicted);
        if let Some(k) = active {
            let kf = &self.state.keyframes[k];
            let x0 = kf.global_pose.inverse().compose(&predicted);
            match register(&set, &kf.set, x0, &self.params.registration) {
                Ok(res) => {
                    pose = kf.global_pose.compose(&res.pose);
                    diag.iterations = res.iterations;
                    diag.correspondences = res.num_correspondences;
                    diag.converged = res.converged;
                    registered = true;
                }
                Err(e) => diag.registration_error = Some(e),
            }
            diag.keyframe_id = Some(k);
        }
        diag.stage_register_ms = elapsed_ms(t);

        let velocity = match dt {
            Some(dt) => update_velocity(&pose, &self.state.current_pose, dt),
            None => Pose2::IDENTITY,
        };

        if registered {
            if let Some((raw, period)) = self.pending_first.take() {
                let t = Instant::now();
                let kf = &mut self.state.keyframes[0];
                let v = body_velocity(&velocity, kf.global_pose.theta);
                let mut rebuilt =
                    build_surface_points(&motion_compensate(&raw, &v, period), &self.params.surface);
                if !rebuilt.is_empty() {
                    rebuilt.set_frame_pose(kf.global_pose);
                    kf.set = rebuilt;
                }
                diag.stage_surface_ms += elapsed_ms(t);
            }
        }

        let spawn = match active {
            None => true,
            Some(k) => {
                let anchor = self.state.keyframes[k].global_pose.translation();
                pose.translation().distance(anchor) > self.params.keyframe_distance
            }
        };
        if spawn && !set.is_empty() {
            set.set_frame_pose(pose);
            self.state.keyframes.push(Keyframe {
                set,
                global_pose: pose,
                timestamp,
            });
            diag.new_keyframe = true;
            if let Some(raw) = raw {
                self.pending_first = Some((raw, scan.sweep_period()));
            }
            if active.is_none() {
                diag.keyframe_id = Some(self.state.keyframes.len() - 1);
            }
        }

        self.state.previous_pose = self.state.current_pose;
        self.state.current_pose = pose;
        self.state.velocity = velocity;
        self.state.last_timestamp = Some(timestamp);
        self.state.frames += 1;
        diag.total_ms = elapsed_ms(total_start);

        Ok(FrameOutput {
            timestamp,
            pose,
            diagnostics: diag,
        })
    }
}

/// Runs the pipeline over a scan sequence.
pub fn run_odometry<'a>(
    scans: impl IntoIterator<Item = &'a PolarScan>,
    params: &OdometryParams,
) -> Result<(TrajectoryEstimate, Vec<FrameDiagnostics>), OdometryError> {
    let mut odom = Odometry::new(params.clone())?;
    let mut traj = TrajectoryEstimate::default();
    let mut diagnostics = Vec::new();
    for scan in scans {
        let out = odom.process_scan(scan)?;
        traj.push(out.timestamp, out.pose)
            .expect("process_scan enforces increasing timestamps");
        diagnostics.push(out.diagnostics);
    }
    Ok((traj, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kf_at(x: f64, y: f64) -> Keyframe {
        Keyframe {
            set: SurfacePointSet::new(Vec::new(), 3.0, Pose2::IDENTITY),
            global_pose: Pose2::new(x, y, 0.0),
            timestamp: 0.0,
        }
    }

    #[test]
    fn velocity_cases() {
        let p = Pose2::new(1.0, 2.0, 0.5);
        assert_eq!(update_velocity(&p, &p, 0.1), Pose2::IDENTITY);
        let v = update_velocity(&Pose2::new(0.25, 0.0, 0.0), &Pose2::IDENTITY, 0.25);
        assert_eq!((v.x, v.y, v.theta), (1.0, 0.0, 0.0));
        let v = update_velocity(&Pose2::new(0.0, 0.0, -3.1), &Pose2::new(0.0, 0.0, 3.1), 1.0);
        let expect = 2.0 * std::f64::consts::PI - 6.2;
        assert!((v.theta - expect).abs() < 1e-12);
        assert!((v.theta - 0.0832).abs() < 1e-3);
    }

    #[test]
    fn keyframe_selection() {
        assert_eq!(select_keyframe(&[], &Pose2::IDENTITY), None);
        assert_eq!(select_keyframe(&[kf_at(3.0, 3.0)], &Pose2::IDENTITY), Some(0));
        let kfs = [kf_at(1.0, 0.0), kf_at(5.0, 0.0)];
        assert_eq!(select_keyframe(&kfs, &Pose2::IDENTITY), Some(0));
        // Tie: the newer keyframe wins.
        let kfs = [kf_at(1.0, 0.0), kf_at(-1.0, 0.0)];
        assert_eq!(select_keyframe(&kfs, &Pose2::IDENTITY), Some(1));
        // Returning to the start prefers the old keyframe over a newer, farther one.
        let kfs = [kf_at(0.0, 0.0), kf_at(10.0, 0.0), kf_at(5.0, 4.0)];
        assert_eq!(select_keyframe(&kfs, &Pose2::new(0.5, 0.2, 0.0)), Some(0));
    }

    #[test]
    fn rejects_invalid_params() {
        let params = OdometryParams {
            keyframe_distance: 0.0,
            ..OdometryParams::default()
        };
        assert!(matches!(Odometry::new(params), Err(OdometryError::InvalidParams(_))));
    }

    #[test]
    fn degenerate_scans_do_not_abort() {
        let mut odom = Odometry::new(OdometryParams::default()).unwrap();
        let zero = PolarScan::new(0.0, 0.25, 0.05, PolarScan::uniform_azimuths(8), 16, vec![0.0; 128]).unwrap();
        let out = odom.process_scan(&zero).unwrap();
        assert_eq!(out.pose, Pose2::IDENTITY);
        assert!(odom.state().keyframes.is_empty());
        let single = PolarScan::new(0.25, 0.25, 0.05, vec![0.0], 16, vec![255.0; 16]).unwrap();
        let out = odom.process_scan(&single).unwrap();
        assert!(out.pose.is_finite());
        assert!(matches!(
            odom.process_scan(&single),
            Err(OdometryError::NonMonotonicTimestamp { .. })
        ));
    }
}
