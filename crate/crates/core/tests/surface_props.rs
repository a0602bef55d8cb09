mod common;

use proptest::prelude::*;
use radar_odom::spatial::GridIndex;
use radar_odom::surface::{build_surface_points_anchored, motion_compensate};
use radar_odom::{build_surface_points, Pose2, RadarPoint, SurfaceParams, SurfacePointSet, Vec2};

use common::covariance_oracle;

fn at(p: Vec2, relative_time: f64) -> RadarPoint {
    RadarPoint {
        position: p,
        power: 1.0,
        azimuth_index: 0,
        bin: 0,
        relative_time,
    }
}

/// A few noisy line segments, the kind of cloud a filtered sweep produces.
fn cloud() -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec(
        (-30.0..30.0f64, -30.0..30.0f64, -3.2..3.2f64, 2.0..10.0f64),
        1..5,
    )
    .prop_flat_map(|segments| {
        let n = segments.len() * 40;
        (Just(segments), prop::collection::vec(-0.05..0.05f64, n))
    })
    .prop_map(|(segments, noise)| {
        let mut out = Vec::new();
        for (s, (x, y, a, len)) in segments.into_iter().enumerate() {
            let dir = Vec2::from_polar(1.0, a);
            for i in 0..40 {
                let along = len * i as f64 / 39.0;
                out.push(Vec2::new(x, y) + dir * along + dir.perp() * noise[s * 40 + i]);
            }
        }
        out
    })
}

fn pose() -> impl Strategy<Value = Pose2> {
    (-20.0..20.0f64, -20.0..20.0f64, -3.1..3.1f64).prop_map(|(x, y, t)| Pose2::new(x, y, t))
}

proptest! {
    #[test]
    fn rigid_equivariance(pts in cloud(), t in pose()) {
        let params = SurfaceParams::default();
        let original = build_surface_points(&pts.iter().map(|&p| at(p, 0.0)).collect::<Vec<_>>(), &params);
        let moved: Vec<RadarPoint> = pts.iter().map(|&p| at(t.transform_point(p), 0.0)).collect();
        let anchored = build_surface_points_anchored(&moved, &params, &t);
        prop_assert_eq!(original.len(), anchored.len());
        for (a, b) in original.points().iter().zip(anchored.points()) {
            prop_assert!(t.transform_point(a.mean).distance(b.mean) < 1e-6);
            let n = t.rotate_vector(a.normal);
            prop_assert!((n - b.normal).norm().min((n + b.normal).norm()) < 1e-6);
            prop_assert_eq!(a.support_count, b.support_count);
        }
    }

    #[test]
    fn surface_points_are_valid_and_sparse(pts in cloud()) {
        let params = SurfaceParams::default();
        let set = build_surface_points(&pts.iter().map(|&p| at(p, 0.0)).collect::<Vec<_>>(), &params);
        let cells = GridIndex::new(pts.clone(), params.resolution / 2.0).num_occupied_cells();
        prop_assert!(set.len() <= cells);
        for sp in set.points() {
            prop_assert!((sp.normal.norm() - 1.0).abs() < 1e-9);
            prop_assert!(sp.support_count >= params.min_neighbors);
            prop_assert!(sp.normal.dot(Vec2::ZERO - sp.mean) >= 0.0);
        }
    }

    #[test]
    fn radius_query_matches_linear_scan(pts in cloud(), cx in -30.0..30.0f64, cy in -30.0..30.0f64, radius in 0.1..20.0f64) {
        let set = build_surface_points(&pts.iter().map(|&p| at(p, 0.0)).collect::<Vec<_>>(), &SurfaceParams::default());
        let center = Vec2::new(cx, cy);
        let got: Vec<Vec2> = set.radius_query(center, radius).iter().map(|p| p.mean).collect();
        let mut expected: Vec<Vec2> = set.points().iter().map(|p| p.mean).filter(|m| m.distance(center) <= radius).collect();
        expected.sort_by(|a, b| a.distance(center).total_cmp(&b.distance(center)));
        prop_assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g.distance(center) - e.distance(center)).abs() < 1e-12);
        }
    }
}

#[test]
fn each_surface_point_matches_its_neighborhood_oracle() {
    // Two perpendicular walls; every surface point is recomputed from the raw cloud.
    let mut pts = Vec::new();
    for i in 0..60 {
        pts.push(Vec2::new(2.0 + 0.1 * i as f64, 5.0));
        pts.push(Vec2::new(8.0, -1.0 + 0.1 * i as f64));
    }
    let params = SurfaceParams::default();
    let raw: Vec<RadarPoint> = pts.iter().map(|&p| at(p, 0.0)).collect();
    let set = build_surface_points(&raw, &params);
    assert!(!set.is_empty());
    let grid = GridIndex::new(pts.clone(), params.resolution / 2.0);
    let mut matched = 0;
    for key in grid.occupied_cells() {
        let c = grid.cell_center(key);
        let support: Vec<Vec2> = pts.iter().copied().filter(|p| p.distance(c) <= params.resolution).collect();
        if support.len() < params.min_neighbors {
            continue;
        }
        let (mean, normal, lo, hi) = covariance_oracle(&support);
        if lo / hi > params.isotropy_reject_ratio {
            continue;
        }
        let sp = set
            .points()
            .iter()
            .find(|sp| sp.mean.distance(mean) < 1e-9)
            .expect("oracle surface point present");
        assert!((sp.normal - normal).norm().min((sp.normal + normal).norm()) < 1e-9);
        matched += 1;
    }
    assert_eq!(matched, set.len());
}

#[test]
fn compensation_follows_constant_velocity() {
    let v = Pose2 { x: 1.0, y: 0.0, theta: 0.0 };
    let pts = [at(Vec2::new(5.0, 1.0), 0.0), at(Vec2::new(5.0, 1.0), 0.25), at(Vec2::new(5.0, 1.0), 0.125)];
    let out = motion_compensate(&pts, &v, 0.25);
    assert!((out[0].position - Vec2::new(4.75, 1.0)).norm() < 1e-12);
    assert_eq!(out[1].position, Vec2::new(5.0, 1.0));
    assert!((out[2].position - Vec2::new(4.875, 1.0)).norm() < 1e-12);
    assert_eq!(motion_compensate(&pts, &Pose2::IDENTITY, 0.25), pts.to_vec());

    // A point seen at the start of a turning sweep: its end-frame position is the inverse
    // of the remaining motion applied to it.
    let turning = Pose2 { x: 2.0, y: 0.0, theta: 0.8 };
    let out = motion_compensate(&pts[..1], &turning, 0.25);
    let motion = Pose2 { x: 0.5, y: 0.0, theta: 0.2 };
    assert!(out[0].position.distance(motion.inverse().transform_point(Vec2::new(5.0, 1.0))) < 1e-12);
}

#[test]
fn empty_input_gives_empty_set() {
    let set: SurfacePointSet = build_surface_points(&[], &SurfaceParams::default());
    assert!(set.is_empty());
    assert!(set.radius_query(Vec2::ZERO, 10.0).is_empty());
}
