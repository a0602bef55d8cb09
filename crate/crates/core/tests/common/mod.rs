//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radar_odom::filter::{k_strongest, polar_to_cartesian};
use radar_odom::registration::Correspondence;
use radar_odom::sim::{render_scan, worlds, ConstantTwist, SimConfig};
use radar_odom::{
    build_surface_points, FilterParams, Metric, OrientedSurfacePoint, PolarScan, Pose2,
    SurfaceParams, SurfacePointSet, Vec2,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random scan with `m ≤ max_m`, `n ≤ max_n`. Powers are drawn from a handful of
/// levels so ties are common.
pub fn random_scan(rng: &mut ChaCha8Rng, max_m: usize, max_n: usize) -> PolarScan {
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(1..=max_n);
    let coarse = rng.random_bool(0.5);
    let power: Vec<f32> = (0..m * n)
        .map(|_| {
            if coarse {
                rng.random_range(0..8) as f32 * 20.0
            } else {
                rng.random_range(0.0f32..150.0)
            }
        })
        .collect();
    PolarScan::new(0.0, 0.25, 0.05, PolarScan::uniform_azimuths(m), n, power).unwrap()
}

/// `(azimuth, bin)` pairs kept per row: full sort by descending power, ascending bin.
pub fn brute_force_k_strongest(scan: &PolarScan, params: &FilterParams) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for az in 0..scan.num_azimuths() {
        let mut row: Vec<(f32, usize)> = scan
            .row(az)
            .iter()
            .enumerate()
            .filter(|&(bin, &p)| p as f64 > params.threshold(bin))
            .map(|(bin, &p)| (p, bin))
            .collect();
        row.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        row.truncate(params.k);
        let mut bins: Vec<usize> = row.into_iter().map(|(_, b)| b).collect();
        bins.sort_unstable();
        out.extend(bins.into_iter().map(|b| (az, b)));
    }
    out
}

/// Mean and unit minor-axis direction of `pts` via nalgebra's symmetric eigensolver.
pub fn covariance_oracle(pts: &[Vec2]) -> (Vec2, Vec2, f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (mx, my) = (sx / n, sy / n);
    let mut c = Matrix2::zeros();
    for p in pts {
        let d = nalgebra::Vector2::new(p.x - mx, p.y - my);
        c += d * d.transpose();
    }
    c /= n;
    let eig = SymmetricEigen::new(c);
    let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let v = eig.eigenvectors.column(lo);
    (
        Vec2::new(mx, my),
        Vec2::new(v[0], v[1]),
        eig.eigenvalues[lo],
        eig.eigenvalues[hi],
    )
}

/// Surface points of a noise-free static scan of the corridor world from `pose`.
pub fn corridor_surface(pose: Pose2) -> SurfacePointSet {
    let world = worlds::corridor_with_corners(120.0, 6.0, 3);
    let config = SimConfig {
        num_bins: 1500,
        ..SimConfig::default()
    };
    let scan = render_scan(&world, &ConstantTwist::stationary(pose), 0.0, 0, &config);
    let points = polar_to_cartesian(&k_strongest(&scan, &FilterParams::default()), &scan);
    build_surface_points(&points, &SurfaceParams::default())
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

pub fn random_correspondence(rng: &mut ChaCha8Rng) -> Correspondence {
    let point = |rng: &mut ChaCha8Rng| OrientedSurfacePoint {
        mean: Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
        normal: random_unit(rng),
        support_count: 6,
    };
    Correspondence {
        source: point(rng),
        target: point(rng),
    }
}

pub fn random_pose(rng: &mut ChaCha8Rng, max_t: f64, max_theta: f64) -> Pose2 {
    Pose2::new(
        rng.random_range(-max_t..=max_t),
        rng.random_range(-max_t..=max_t),
        rng.random_range(-max_theta..=max_theta),
    )
}

/// Largest relative deviation between the analytic Jacobian of `pair` at `x` and central
/// differences with step `h`, over all rows and columns. Columns whose entries are both
/// tiny are compared absolutely.
pub fn jacobian_fd_error(pair: &Correspondence, x: &Pose2, metric: Metric, h: f64) -> f64 {
    use radar_odom::registration::residual;
    let lin = residual(pair, x, metric);
    let mut worst: f64 = 0.0;
    for col in 0..3 {
        let mut plus = [x.x, x.y, x.theta];
        let mut minus = plus;
        plus[col] += h;
        minus[col] -= h;
        // Poses are built without normalization so the difference stays local.
        let p = Pose2 {
            x: plus[0],
            y: plus[1],
            theta: plus[2],
        };
        let q = Pose2 {
            x: minus[0],
            y: minus[1],
            theta: minus[2],
        };
        let rp = residual(pair, &p, metric);
        let rq = residual(pair, &q, metric);
        for row in 0..lin.rows {
            let fd = (rp.residual[row] - rq.residual[row]) / (2.0 * h);
            let an = lin.jacobian[row][col];
            let scale = an.abs().max(fd.abs()).max(1.0);
            worst = worst.max((an - fd).abs() / scale);
        }
    }
    worst
}
