use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radar_odom::eval::kitti_odometry_error;
use radar_odom::io::{read_scan_archive, read_trajectory, trajectory_to_string};
use radar_odom::{Pose2, TrajectoryEstimate, TrajectoryFormat};

const SMALL: &str = "num_azimuths = 200\nnum_bins = 800\n";

fn radar_odom(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-odom"))
        .args(args)
        .current_dir(dir)
        .env_remove("RADAR_ODOM_THREADS")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn world() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corridor.world")
}

/// Simulates `scans` frames of the sample corridor into `dir/out`.
fn simulate(dir: &Path, scans: usize, extra: &[&str]) -> Output {
    std::fs::write(dir.join("small.conf"), SMALL).unwrap();
    let n = scans.to_string();
    let w = world();
    let mut args = vec!["simulate", w.to_str().unwrap(), "--scans", &n, "--config", "small.conf", "--output", "out"];
    args.extend_from_slice(extra);
    radar_odom(&args, dir)
}

#[test]
fn simulate_writes_archive_and_truth_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    ok(&simulate(dir.path(), 20, &["--seed", "5"]));
    let archive = read_scan_archive(&dir.path().join("out/scans.rdr")).unwrap();
    assert_eq!(archive.len(), 20);
    assert_eq!(archive.scans()[0].num_bins(), 800);
    assert_eq!(read_trajectory(&dir.path().join("out/truth.txt"), None).unwrap().len(), 20);

    let first = std::fs::read(dir.path().join("out/scans.rdr")).unwrap();
    ok(&simulate(dir.path(), 20, &["--seed", "5"]));
    assert_eq!(std::fs::read(dir.path().join("out/scans.rdr")).unwrap(), first);
}

#[test]
fn malformed_world_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.world"), "0 0 1 0 1\n0 0 1\n").unwrap();
    let out = radar_odom(&["simulate", "bad.world", "--scans", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn odometry_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    ok(&simulate(dir.path(), 30, &[]));
    let report = ok(&radar_odom(&["odometry", "out/scans.rdr", "--output", "run1"], dir.path()));
    assert!(report.contains("processed 30 scans"), "{report}");

    let traj = read_trajectory(&dir.path().join("run1/trajectory.txt"), None).unwrap();
    assert_eq!(traj.len(), 30);
    let truth = read_trajectory(&dir.path().join("out/truth.txt"), None).unwrap();
    let (end, true_end) = (traj.entries()[29].1, truth.entries()[29].1);
    let true_delta = truth.entries()[0].1.inverse().compose(&true_end);
    assert!((end.x - true_delta.x).abs() < 0.5, "{end:?} vs {true_delta:?}");

    let diag = std::fs::read_to_string(dir.path().join("run1/diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(
        lines.next().unwrap(),
        "frame,stage_filter_ms,stage_surface_ms,stage_register_ms,total_ms,iterations,correspondences,keyframe_id"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 30);
    for r in &rows {
        let v: Vec<f64> = r[1..5].iter().map(|s| s.parse().unwrap()).collect();
        assert!(v.iter().all(|&x| x >= 0.0));
        // Values are printed to 1e-4 ms, so allow that rounding on top of 5%.
        assert!((v[0] + v[1] + v[2] - v[3]).abs() <= 0.05 * v[3] + 4e-4, "{r:?}");
    }

    ok(&radar_odom(&["odometry", "out/scans.rdr", "--output", "run2"], dir.path()));
    assert_eq!(
        std::fs::read(dir.path().join("run1/trajectory.txt")).unwrap(),
        std::fs::read(dir.path().join("run2/trajectory.txt")).unwrap()
    );

    ok(&radar_odom(&["odometry", "out/scans.rdr", "--output", "kitti", "--format", "kitti"], dir.path()));
    let k = std::fs::read_to_string(dir.path().join("kitti/trajectory.txt")).unwrap();
    assert_eq!(k.lines().count(), 30);
    assert_eq!(k.lines().next().unwrap().split_whitespace().count(), 12);
}

#[test]
fn input_and_config_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(radar_odom(&["odometry", "missing.rdr"], p).status.code(), Some(1));
    std::fs::write(p.join("junk.rdr"), b"not an archive").unwrap();
    assert_eq!(radar_odom(&["odometry", "junk.rdr"], p).status.code(), Some(1));

    std::fs::write(p.join("bad.conf"), "k = 4\nfrobnicate = 2\n").unwrap();
    let out = radar_odom(&["odometry", "junk.rdr", "--config", "bad.conf"], p);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(radar_odom(&["odometry", "junk.rdr", "--k", "0"], p).status.code(), Some(2));
    assert_eq!(radar_odom(&["odometry", "junk.rdr", "--metric", "p3p"], p).status.code(), Some(2));
    let w = world();
    let out = radar_odom(&["simulate", w.to_str().unwrap(), "--trajectory", "zigzag"], p);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_radar-odom"))
        .args(["odometry", "junk.rdr"])
        .current_dir(p)
        .env("RADAR_ODOM_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    ok(&simulate(dir.path(), 12, &[]));
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_radar-odom"))
            .args(["odometry", "out/scans.rdr", "--output", out])
            .current_dir(dir.path())
            .env("RADAR_ODOM_THREADS", threads)
            .output()
            .unwrap();
        ok(&o);
        std::fs::read(dir.path().join(out).join("trajectory.txt")).unwrap()
    };
    assert_eq!(run("1", "a"), run("3", "b"));
}

fn write_traj(path: &Path, t: &TrajectoryEstimate) {
    std::fs::write(path, trajectory_to_string(t, TrajectoryFormat::Native)).unwrap();
}

fn line(n: usize, step: f64) -> TrajectoryEstimate {
    TrajectoryEstimate::new((0..n).map(|i| (i as f64 * 0.25, Pose2::new(step * i as f64, 0.0, 0.0))).collect()).unwrap()
}

#[test]
fn evaluate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let truth = line(500, 1.0);
    write_traj(&p.join("truth.txt"), &truth);

    let report = ok(&radar_odom(&["evaluate", "truth.txt", "truth.txt"], p));
    assert!(report.contains("translation error: 0.0000 %"), "{report}");
    assert!(report.contains("relative pose error: 0.0000 m"), "{report}");
    let csv = std::fs::read_to_string(p.join("evaluation.csv")).unwrap();
    assert!(csv.starts_with("length_m,segments,trans_err_pct,rot_err_deg_per_100m,rpe_m\n"));
    assert!(csv.lines().any(|l| l.starts_with("all,")));

    // Heading drift of 1e-3 rad per frame, plus a small forward bias.
    let mut pose = Pose2::IDENTITY;
    let drifted = TrajectoryEstimate::new(
        (0..500)
            .map(|i| {
                let out = (i as f64 * 0.25, pose);
                pose = pose.compose(&Pose2::new(1.002, 0.0, 1e-3));
                out
            })
            .collect(),
    )
    .unwrap();
    write_traj(&p.join("est.txt"), &drifted);
    let want = kitti_odometry_error(&drifted, &truth).unwrap();
    ok(&radar_odom(&["evaluate", "est.txt", "truth.txt", "--output", "e"], p));
    let csv = std::fs::read_to_string(p.join("e/evaluation.csv")).unwrap();
    let all: Vec<&str> = csv.lines().find(|l| l.starts_with("all,")).unwrap().split(',').collect();
    let t: f64 = all[2].parse().unwrap();
    let r: f64 = all[3].parse().unwrap();
    let e: f64 = all[4].parse().unwrap();
    assert!(t > 0.1 && r > 1.0);
    assert!((t - want.translation_error_percent).abs() < 1e-9);
    assert!((r - want.rotation_error_deg_per_100m).abs() < 1e-9);
    assert!((e - want.rpe_mean).abs() < 1e-9);

    write_traj(&p.join("one.txt"), &line(1, 1.0));
    let report = ok(&radar_odom(&["evaluate", "one.txt", "one.txt", "--output", "one"], p));
    assert!(report.contains("path too short"), "{report}");
    assert!(report.contains("relative pose error unavailable"), "{report}");

    std::fs::write(p.join("garbage.txt"), "1 2 three\n").unwrap();
    assert_eq!(radar_odom(&["evaluate", "garbage.txt", "truth.txt"], p).status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&simulate(p, 90, &[]));
    let out = ok(&radar_odom(
        &["sweep", "out/scans.rdr", "out/truth.txt", "--resolutions", "2,3,4", "--metrics", "p2l,p2p"],
        p,
    ));
    assert_eq!(out.lines().filter(|l| l.starts_with("r = ")).count(), 6);
    let csv = std::fs::read_to_string(p.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "resolution,metric,trans_err_pct,rot_err_deg_per_100m,rpe_m");
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn sweep_on_empty_archive_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&simulate(p, 0, &[]));
    let out = radar_odom(&["sweep", "out/scans.rdr", "out/truth.txt", "--resolutions", "2"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(std::fs::read_to_string(p.join("sweep.csv")).unwrap().contains("NaN"));
}
