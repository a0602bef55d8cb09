//! Simulates a drive down a corridor and reports odometry error against ground truth.
//!
//! cargo run --release -p radar-odom --example sim_drive -- [frames] [noise_sd] [dropout]

use radar_odom::eval::kitti_odometry_error;
use radar_odom::odometry::Odometry;
use radar_odom::sim::{render_scan, worlds, ConstantTwist, SimConfig, Trajectory};
use radar_odom::{OdometryParams, Pose2, TrajectoryEstimate};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let frames: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let noise_sd: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let dropout: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);

    let config = SimConfig {
        noise_floor_mean: if noise_sd > 0.0 { 20.0 } else { 0.0 },
        noise_floor_sd: noise_sd,
        speckle_dropout_prob: dropout,
        ..SimConfig::default()
    };
    let speed = 5.0;
    let length = speed * config.sweep_period * frames as f64 + 20.0;
    let world = worlds::corridor_with_corners(length, 6.0, 3);
    let trajectory = ConstantTwist::straight(Pose2::IDENTITY, speed);

    let mut odom = Odometry::new(OdometryParams::default()).expect("default parameters are valid");
    let mut estimate = TrajectoryEstimate::default();
    let mut truth = TrajectoryEstimate::default();
    let (mut filter_ms, mut surface_ms, mut register_ms, mut total_ms) = (0.0, 0.0, 0.0, 0.0);
    let mut failures = 0;
    for i in 0..frames {
        let start = i as f64 * config.sweep_period;
        let scan = render_scan(&world, &trajectory, start, i as u64, &config);
        let out = odom.process_scan(&scan).expect("timestamps increase");
        let d = &out.diagnostics;
        filter_ms += d.stage_filter_ms;
        surface_ms += d.stage_surface_ms;
        register_ms += d.stage_register_ms;
        total_ms += d.total_ms;
        failures += usize::from(d.registration_failed());
        estimate.push(out.timestamp, out.pose).unwrap();
        truth.push(scan.end_time(), trajectory.pose_at(scan.end_time())).unwrap();
    }
    let n = frames as f64;
    println!(
        "frames {frames}: filter {:.2} ms, surface {:.2} ms, register {:.2} ms, total {:.2} ms, failures {failures}",
        filter_ms / n,
        surface_ms / n,
        register_ms / n,
        total_ms / n
    );
    let last = estimate.entries().last().unwrap().1;
    let first_truth = truth.entries()[0].1;
    let last_truth = truth.entries().last().unwrap().1;
    println!("final estimate {last:?}, true displacement {:?}", first_truth.inverse().compose(&last_truth));
    match kitti_odometry_error(&estimate, &truth) {
        Ok(r) => println!(
            "translation {:.3}%, rotation {:.4} deg/100m, rpe {:.4} m",
            r.translation_error_percent, r.rotation_error_deg_per_100m, r.rpe_mean
        ),
        Err(e) => println!("{e}"),
    }
}
