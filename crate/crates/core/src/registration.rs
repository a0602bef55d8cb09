//! Scan-to-keyframe alignment on SE(2).
//!
//! Alternates nearest-neighbour association with Gauss–Newton steps on a Huber-robustified
//! sum of point-to-line (or point-to-point) residuals. The pose is updated additively in
//! `(x, y, θ)`, which is the parameterization the Jacobians below are taken in.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Pose2;
use crate::surface::{OrientedSurfacePoint, SurfacePointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Residual is the displacement projected on the target normal.
    PointToLine,
    /// Residual is the full displacement between paired means.
    PointToPoint,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::PointToLine => "p2l",
            Metric::PointToPoint => "p2p",
        })
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p2l" | "point-to-line" => Ok(Metric::PointToLine),
            "p2p" | "point-to-point" => Ok(Metric::PointToPoint),
            other => Err(format!("unknown metric `{other}` (expected p2l or p2p)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationParams {
    pub metric: Metric,
    pub association_radius: f64,
    pub max_iterations: usize,
    pub translation_tolerance: f64,
    pub rotation_tolerance: f64,
    pub min_correspondences: usize,
    /// Huber threshold in meters; `f64::INFINITY` gives plain least squares.
    pub huber_delta: f64,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        Self {
            metric: Metric::PointToLine,
            association_radius: 3.0,
            max_iterations: 50,
            translation_tolerance: 1e-3,
            rotation_tolerance: 1e-4,
            min_correspondences: 10,
            huber_delta: 0.1,
        }
    }
}

impl RegistrationParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.association_radius > 0.0 && self.association_radius.is_finite()) {
            return Err("association_radius must be positive and finite".into());
        }
        if self.max_iterations == 0 {
            return Err("max_iterations must be at least 1".into());
        }
        if !(self.translation_tolerance > 0.0) || !(self.rotation_tolerance > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.huber_delta > 0.0) {
            return Err("huber_delta must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistrationError {
    #[error("only {found} correspondences, at least {required} required")]
    TooFewCorrespondences { found: usize, required: usize },
    #[error("normal equations are rank deficient")]
    SingularNormalEquations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub source: OrientedSurfacePoint,
    pub target: OrientedSurfacePoint,
}

/// Cost of one accepted (or rejected) iteration, with associations held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTrace {
    pub correspondences: usize,
    pub cost_before: f64,
    pub cost_after: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Maps source coordinates into the target frame.
    pub pose: Pose2,
    pub converged: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub num_correspondences: usize,
    pub trace: Vec<IterationTrace>,
}

/// Pairs each source point (moved by `x`) with its nearest target point within `radius`.
pub fn associate(
    source: &SurfacePointSet,
    target: &SurfacePointSet,
    x: &Pose2,
    radius: f64,
) -> Vec<Correspondence> {
    source
        .points()
        .iter()
        .filter_map(|s| {
            let moved = x.transform_point(s.mean);
            target.nearest_within(moved, radius).map(|j| Correspondence {
                source: *s,
                target: target.points()[j],
            })
        })
        .collect()
}

/// Huber loss on a residual magnitude: `r²` inside `delta`, `2δ|r| − δ²` outside.
pub fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        a * a
    } else {
        2.0 * delta * a - delta * delta
    }
}

/// Iteratively reweighted least-squares weight matching [`huber`].
fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

/// Residual rows of one correspondence and their Jacobian w.r.t. `(x, y, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub rows: usize,
    pub residual: [f64; 2],
    pub jacobian: [[f64; 3]; 2],
}

impl Linearization {
    /// Magnitude the robust loss is applied to.
    pub fn magnitude(&self) -> f64 {
        match self.rows {
            1 => self.residual[0].abs(),
            _ => self.residual[0].hypot(self.residual[1]),
        }
    }
}

pub fn residual(pair: &Correspondence, x: &Pose2, metric: Metric) -> Linearization {
    let rotated = x.rotate_vector(pair.source.mean);
    let diff = rotated + x.translation() - pair.target.mean;
    // d(R·μ)/dθ
    let d_theta = rotated.perp();
    match metric {
        Metric::PointToLine => {
            let n = pair.target.normal;
            Linearization {
                rows: 1,
                residual: [n.dot(diff), 0.0],
                jacobian: [[n.x, n.y, n.dot(d_theta)], [0.0; 3]],
            }
        }
        Metric::PointToPoint => Linearization {
            rows: 2,
            residual: [diff.x, diff.y],
            jacobian: [[1.0, 0.0, d_theta.x], [0.0, 1.0, d_theta.y]],
        },
    }
}

/// Robust cost of the pairs at pose `x`. Zero for no pairs.
pub fn cost(pairs: &[Correspondence], x: &Pose2, metric: Metric, huber_delta: f64) -> f64 {
    pairs
        .iter()
        .map(|p| huber(residual(p, x, metric).magnitude(), huber_delta))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Additive increment of `(x, y, θ)`.
    pub delta: Pose2,
    pub predicted_cost_drop: f64,
}

/// One Gauss–Newton step with Huber reweighting.
pub fn solve_step(
    pairs: &[Correspondence],
    x: &Pose2,
    metric: Metric,
    huber_delta: f64,
) -> Result<Step, RegistrationError> {
    let mut h = [[0.0f64; 3]; 3];
    let mut g = [0.0f64; 3];
    for pair in pairs {
        let lin = residual(pair, x, metric);
        let w = huber_weight(lin.magnitude(), huber_delta);
        for row in 0..lin.rows {
            let j = &lin.jacobian[row];
            let r = lin.residual[row];
            for a in 0..3 {
                g[a] += w * j[a] * r;
                for b in a..3 {
                    h[a][b] += w * j[a] * j[b];
                }
            }
        }
    }
    for a in 0..3 {
        for b in 0..a {
            h[a][b] = h[b][a];
        }
    }
    let neg_g = [-g[0], -g[1], -g[2]];
    let d = solve_spd3(&h, &neg_g).ok_or(RegistrationError::SingularNormalEquations)?;
    Ok(Step {
        delta: Pose2 {
            x: d[0],
            y: d[1],
            theta: d[2],
        },
        predicted_cost_drop: -(g[0] * d[0] + g[1] * d[1] + g[2] * d[2]),
    })
}

/// Solves `h·d = b` for symmetric positive definite `h` by Cholesky. Returns `None` when a
/// pivot collapses below `1e-10` of its original diagonal entry.
fn solve_spd3(h: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    const REL_PIVOT: f64 = 1e-10;
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = h[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s.is_finite() && s > 0.0 && s > REL_PIVOT * h[i][i]) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0f64; 3];
    for i in 0..3 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut d = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in i + 1..3 {
            s -= l[k][i] * d[k];
        }
        d[i] = s / l[i][i];
    }
    d.iter().all(|v| v.is_finite()).then_some(d)
}

const MAX_HALVINGS: usize = 10;

/// Finds the pose mapping `source` onto `target`, starting from `x0`.
pub fn register(
    source: &SurfacePointSet,
    target: &SurfacePointSet,
    x0: Pose2,
    params: &RegistrationParams,
) -> Result<RegistrationResult, RegistrationError> {
    let mut x = x0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut final_cost = 0.0;
    let mut num_correspondences = 0;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        let pairs = associate(source, target, &x, params.association_radius);
        if pairs.len() < params.min_correspondences.max(1) {
            return Err(RegistrationError::TooFewCorrespondences {
                found: pairs.len(),
                required: params.min_correspondences.max(1),
            });
        }
        num_correspondences = pairs.len();
        let before = cost(&pairs, &x, params.metric, params.huber_delta);
        let step = solve_step(&pairs, &x, params.metric, params.huber_delta)?;

        let mut delta = step.delta;
        let mut candidate = x.plus(&delta);
        let mut after = cost(&pairs, &candidate, params.metric, params.huber_delta);
        let mut halvings = 0;
        while after > before && halvings < MAX_HALVINGS {
            halvings += 1;
            delta = Pose2 {
                x: delta.x * 0.5,
                y: delta.y * 0.5,
                theta: delta.theta * 0.5,
            };
            candidate = x.plus(&delta);
            after = cost(&pairs, &candidate, params.metric, params.huber_delta);
        }
        let small = delta.x.hypot(delta.y) < params.translation_tolerance
            && delta.theta.abs() < params.rotation_tolerance;
        if after > before {
            // No descent along the Gauss–Newton direction; stay put.
            trace.push(IterationTrace {
                correspondences: pairs.len(),
                cost_before: before,
                cost_after: before,
                halvings,
            });
            final_cost = before;
            converged = small;
            break;
        }
        trace.push(IterationTrace {
            correspondences: pairs.len(),
            cost_before: before,
            cost_after: after,
            halvings,
        });
        x = candidate;
        final_cost = after;
        if small {
            converged = true;
            break;
        }
    }

    Ok(RegistrationResult {
        pose: x,
        converged,
        iterations,
        final_cost,
        num_correspondences,
        trace,
    })
}
