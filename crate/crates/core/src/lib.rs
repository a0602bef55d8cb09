//! Radar odometry from rotating 2D radar sweeps.
//!
//! The pipeline keeps the k strongest returns per azimuth, summarizes them as oriented
//! surface points (local mean plus normal), and registers each sweep against a nearby
//! keyframe by minimizing point-to-line distances on SE(2). A seeded radar simulator and
//! odometry error metrics are included for offline evaluation.

pub mod eval;
pub mod filter;
pub mod geometry;
pub mod io;
pub mod odometry;
pub mod registration;
pub mod sim;
pub mod spatial;
pub mod surface;

pub use eval::{kitti_odometry_error, relative_pose_error, resolution_sweep, OdomErrorReport};
pub use filter::{k_strongest, polar_to_cartesian, FilterParams, PolarScan, RadarPoint};
pub use geometry::{eigen_min, Pose2, SymMat2, Vec2};
pub use io::{ScanArchive, TrajectoryEstimate, TrajectoryFormat};
pub use odometry::{FrameDiagnostics, Odometry, OdometryParams};
pub use registration::{register, Metric, RegistrationParams, RegistrationResult};
pub use surface::{build_surface_points, OrientedSurfacePoint, SurfaceParams, SurfacePointSet};
