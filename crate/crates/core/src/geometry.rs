//! SE(2) poses, 2D vectors and the closed-form 2×2 symmetric eigen-decomposition.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

/// Eigenvalue ratio `λ_min / λ_max` above which a covariance counts as isotropic.
pub const ISOTROPY_RATIO: f64 = 0.9;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid maps the upper boundary onto -π; the interval is open there.
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(range: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(range * c, range * s)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Rigid transform in the plane: rotation by `theta` followed by translation `(x, y)`.
///
/// `theta` is kept in `(-π, π]` by every constructor and operation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const IDENTITY: Pose2 = Pose2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn from_translation(t: Vec2) -> Self {
        Self::new(t.x, t.y, 0.0)
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let t = self.transform_point(other.translation());
        Pose2::new(t.x, t.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2 {
        let t = (-self.translation()).rotated(-self.theta);
        Pose2::new(t.x, t.y, -self.theta)
    }

    pub fn transform_point(&self, v: Vec2) -> Vec2 {
        v.rotated(self.theta) + self.translation()
    }

    pub fn rotate_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(self.theta)
    }

    /// Component-wise scaling of `(x, y, θ)`, used for linear interpolation of small motions.
    pub fn scaled(&self, s: f64) -> Pose2 {
        Pose2::new(self.x * s, self.y * s, self.theta * s)
    }

    /// Component-wise `self + delta` with the angle re-normalized.
    pub fn plus(&self, delta: &Pose2) -> Pose2 {
        Pose2::new(self.x + delta.x, self.y + delta.y, self.theta + delta.theta)
    }

    /// Component-wise `self - other` with the shortest angle difference.
    pub fn minus(&self, other: &Pose2) -> Pose2 {
        Pose2::new(self.x - other.x, self.y - other.y, self.theta - other.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

impl Mul for Pose2 {
    type Output = Pose2;
    fn mul(self, rhs: Pose2) -> Pose2 {
        self.compose(&rhs)
    }
}

impl Mul<Vec2> for Pose2 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        self.transform_point(rhs)
    }
}

/// Symmetric 2×2 matrix stored by its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a12 * v.x + self.a22 * v.y,
        )
    }

    /// Smallest eigenpair, computed in closed form.
    pub fn eigen_min(&self) -> MinEigen {
        eigen_min(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEigen {
    pub value: f64,
    /// Unit eigenvector for `value`.
    pub vector: Vec2,
    /// The larger eigenvalue; kept so callers can apply their own isotropy ratio.
    pub max_value: f64,
    /// Set when `value / max_value > ISOTROPY_RATIO`, i.e. the eigenvector is not meaningful.
    pub degenerate: bool,
}

impl MinEigen {
    /// Whether `λ_min / λ_max` exceeds `ratio`. A zero or negative `λ_max` is always isotropic.
    pub fn is_isotropic(&self, ratio: f64) -> bool {
        if !(self.max_value > 0.0) {
            return true;
        }
        self.value / self.max_value > ratio
    }
}

/// Smallest eigenvalue and a unit eigenvector of a symmetric 2×2 matrix.
///
/// Uses the half-angle form: the major axis makes angle `½·atan2(2·a12, a11 − a22)` with
/// the x-axis, and the minor eigenvector is its quarter turn.
pub fn eigen_min(m: &SymMat2) -> MinEigen {
    let mean = 0.5 * (m.a11 + m.a22);
    let half_diff = 0.5 * (m.a11 - m.a22);
    let radius = half_diff.hypot(m.a12);
    let value = mean - radius;
    let max_value = mean + radius;
    let phi = 0.5 * (2.0 * m.a12).atan2(m.a11 - m.a22);
    let (s, c) = phi.sin_cos();
    let vector = Vec2::new(-s, c);
    let mut out = MinEigen {
        value,
        vector,
        max_value,
        degenerate: false,
    };
    out.degenerate = out.is_isotropic(ISOTROPY_RATIO);
    out
}
