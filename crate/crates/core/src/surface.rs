//! Oriented surface points: local means and normals summarizing a filtered sweep.
//!
//! Space is cut into square cells of side `r/2` anchored at the sensor origin. Every
//! occupied cell gathers all points within `r` of its center; if enough of them are
//! found and their spread is elongated, the sample mean and the eigenvector of the
//! smallest covariance eigenvalue form one surface point. The normal is signed to
//! face the sensor.

use crate::filter::RadarPoint;
use crate::geometry::{eigen_min, Pose2, SymMat2, Vec2};
use crate::spatial::GridIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceParams {
    /// Neighborhood radius `r`; the grid cell side is `r/2`.
    pub resolution: f64,
    pub min_neighbors: usize,
    /// Cells with `λ_min / λ_max` above this are dropped.
    pub isotropy_reject_ratio: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            resolution: 3.0,
            min_neighbors: 6,
            isotropy_reject_ratio: 0.9,
        }
    }
}

impl SurfaceParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err("resolution must be positive and finite".into());
        }
        if self.min_neighbors < 3 {
            return Err("min_neighbors must be at least 3".into());
        }
        if !(self.isotropy_reject_ratio > 0.0 && self.isotropy_reject_ratio <= 1.0) {
            return Err("isotropy_reject_ratio must lie in (0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedSurfacePoint {
    pub mean: Vec2,
    pub normal: Vec2,
    pub support_count: usize,
}

/// Surface points of one sweep together with a grid index over their means.
#[derive(Debug, Clone)]
pub struct SurfacePointSet {
    points: Vec<OrientedSurfacePoint>,
    index: GridIndex,
    frame_pose: Pose2,
}

impl SurfacePointSet {
    /// Indexes `points` with cells of side `cell_size`.
    pub fn new(points: Vec<OrientedSurfacePoint>, cell_size: f64, frame_pose: Pose2) -> Self {
        let index = GridIndex::new(points.iter().map(|p| p.mean).collect(), cell_size);
        Self {
            points,
            index,
            frame_pose,
        }
    }

    pub fn points(&self) -> &[OrientedSurfacePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Global pose of the sensor frame the points are expressed in.
    pub fn frame_pose(&self) -> Pose2 {
        self.frame_pose
    }

    pub fn set_frame_pose(&mut self, pose: Pose2) {
        self.frame_pose = pose;
    }

    pub fn index(&self) -> &GridIndex {
        &self.index
    }

    /// Points whose mean lies within `radius` of `center`, nearest first.
    pub fn radius_query(&self, center: Vec2, radius: f64) -> Vec<&OrientedSurfacePoint> {
        self.index
            .within(center, radius)
            .into_iter()
            .map(|(i, _)| &self.points[i])
            .collect()
    }

    /// Index of the nearest point within `radius`, i.e. the head of [`Self::radius_query`].
    pub fn nearest_within(&self, center: Vec2, radius: f64) -> Option<usize> {
        self.index.nearest_within(center, radius).map(|(i, _)| i)
    }

    /// Copy of the set with every point mapped through `pose`.
    pub fn transformed(&self, pose: &Pose2) -> SurfacePointSet {
        let points = self
            .points
            .iter()
            .map(|p| OrientedSurfacePoint {
                mean: pose.transform_point(p.mean),
                normal: pose.rotate_vector(p.normal),
                support_count: p.support_count,
            })
            .collect();
        SurfacePointSet::new(points, self.index.cell_size(), self.frame_pose)
    }
}

/// Re-expresses every point in the sensor frame at the end of the sweep, assuming the
/// body-frame `velocity` (m/s, m/s, rad/s) stayed constant over the sweep.
pub fn motion_compensate(
    points: &[RadarPoint],
    velocity: &Pose2,
    sweep_period: f64,
) -> Vec<RadarPoint> {
    if *velocity == Pose2::IDENTITY {
        return points.to_vec();
    }
    points
        .iter()
        .map(|p| {
            let remaining = sweep_period - p.relative_time;
            // Motion from the capture instant to the sweep end, linear in (x, y, θ).
            let motion = velocity.scaled(remaining);
            RadarPoint {
                position: motion.inverse().transform_point(p.position),
                ..*p
            }
        })
        .collect()
}

/// Builds surface points with the grid anchored at the sensor origin.
pub fn build_surface_points(points: &[RadarPoint], params: &SurfaceParams) -> SurfacePointSet {
    build_surface_points_anchored(points, params, &Pose2::IDENTITY)
}

/// Like [`build_surface_points`], with the grid laid out in the frame `grid_frame`
/// (expressed in the sensor frame) instead of at the sensor origin.
pub fn build_surface_points_anchored(
    points: &[RadarPoint],
    params: &SurfaceParams,
    grid_frame: &Pose2,
) -> SurfacePointSet {
    let r = params.resolution;
    if points.is_empty() {
        return SurfacePointSet::new(Vec::new(), r, Pose2::IDENTITY);
    }
    let to_grid = grid_frame.inverse();
    let local: Vec<Vec2> = points
        .iter()
        .map(|p| to_grid.transform_point(p.position))
        .collect();
    let grid = GridIndex::new(local, 0.5 * r);
    let sensor_origin = Vec2::ZERO;

    let mut out = Vec::with_capacity(grid.num_occupied_cells());
    let mut support: Vec<usize> = Vec::new();
    for key in grid.occupied_cells() {
        let center = grid.cell_center(key);
        support.clear();
        grid.for_each_within(center, r, |i, _| support.push(i));
        if support.len() < params.min_neighbors {
            continue;
        }
        // Fixed summation order keeps results independent of hash iteration.
        support.sort_unstable();
        let Some((mean, cov)) = mean_and_covariance(grid.positions(), &support) else {
            continue;
        };
        let eig = eigen_min(&cov);
        if eig.is_isotropic(params.isotropy_reject_ratio) {
            continue;
        }
        let mean = grid_frame.transform_point(mean);
        let mut normal = grid_frame.rotate_vector(eig.vector);
        if normal.dot(sensor_origin - mean) < 0.0 {
            normal = -normal;
        }
        out.push(OrientedSurfacePoint {
            mean,
            normal,
            support_count: support.len(),
        });
    }
    SurfacePointSet::new(out, r, Pose2::IDENTITY)
}

/// Sample mean and (biased, 1/N) covariance of the selected positions, in two passes.
fn mean_and_covariance(positions: &[Vec2], selected: &[usize]) -> Option<(Vec2, SymMat2)> {
    if selected.is_empty() {
        return None;
    }
    let inv_n = 1.0 / selected.len() as f64;
    let mut sum = Vec2::ZERO;
    for &i in selected {
        sum = sum + positions[i];
    }
    let mean = sum * inv_n;
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for &i in selected {
        let d = positions[i] - mean;
        xx += d.x * d.x;
        xy += d.x * d.y;
        yy += d.y * d.y;
    }
    let cov = SymMat2::new(xx * inv_n, xy * inv_n, yy * inv_n);
    (mean.is_finite() && cov.trace().is_finite()).then_some((mean, cov))
}
