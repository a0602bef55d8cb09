//! Subcommand bodies. Each takes a resolved [`RunConfig`] and writes its outputs under
//! `config.output`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use radar_odom::eval::{kitti_odometry_error, relative_pose_error, sweep_to_csv, EvalError};
use radar_odom::io::{
    read_oxford_polar, read_scan_archive, read_trajectory, trajectory_to_string, write_atomic,
    write_scan_archive, IoError,
};
use radar_odom::odometry::run_odometry;
use radar_odom::sim::{render_sequence, ConstantTwist, World2D};
use radar_odom::{
    resolution_sweep, FrameDiagnostics, Metric, Pose2, ScanArchive, TrajectoryEstimate,
};

use crate::config::RunConfig;
use crate::CliError;

pub const DIAGNOSTICS_CSV_HEADER: &str =
    "frame,stage_filter_ms,stage_surface_ms,stage_register_ms,total_ms,iterations,correspondences,keyframe_id";

pub const EVALUATION_CSV_HEADER: &str =
    "length_m,segments,trans_err_pct,rot_err_deg_per_100m,rpe_m";

fn input(e: IoError) -> CliError {
    CliError::Input(e.to_string())
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(input)?;
    Ok(path)
}

/// A directory is read as Oxford-style polar PNGs, anything else as a scan archive.
pub fn load_scans(path: &Path) -> Result<ScanArchive, CliError> {
    if path.is_dir() {
        read_oxford_polar(path).map_err(input)
    } else {
        read_scan_archive(path).map_err(input)
    }
}

pub fn diagnostics_to_csv(diagnostics: &[FrameDiagnostics]) -> String {
    let mut out = String::from(DIAGNOSTICS_CSV_HEADER);
    out.push('\n');
    for d in diagnostics {
        let keyframe = d.keyframe_id.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{},{},{}",
            d.frame,
            d.stage_filter_ms,
            d.stage_surface_ms,
            d.stage_register_ms,
            d.total_ms,
            d.iterations,
            d.correspondences,
            keyframe
        );
    }
    out
}

fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn odometry(archive: &Path, config: &RunConfig) -> Result<String, CliError> {
    let scans = load_scans(archive)?;
    let (estimate, diagnostics) =
        run_odometry(scans.scans(), &config.odometry).map_err(|e| CliError::Input(e.to_string()))?;
    let traj = write(
        &config.output,
        "trajectory.txt",
        trajectory_to_string(&estimate, config.format).as_bytes(),
    )?;
    let diag = write(
        &config.output,
        "diagnostics.csv",
        diagnostics_to_csv(&diagnostics).as_bytes(),
    )?;

    let mut report = format!("processed {} scans\n", diagnostics.len());
    let stages: [(&str, fn(&FrameDiagnostics) -> f64); 4] = [
        ("filter", |d| d.stage_filter_ms),
        ("surface", |d| d.stage_surface_ms),
        ("register", |d| d.stage_register_ms),
        ("total", |d| d.total_ms),
    ];
    for (name, stage) in stages {
        let (m, s) = mean_sd(diagnostics.iter().map(stage));
        let _ = writeln!(report, "{name:>9}: {m:.2} ± {s:.2} ms");
    }
    let failed = diagnostics.iter().filter(|d| d.registration_failed()).count();
    if failed > 0 {
        let _ = writeln!(report, "registration failed on {failed} frames (dead-reckoned)");
    }
    let _ = writeln!(report, "wrote {}\nwrote {}", traj.display(), diag.display());
    Ok(report)
}

/// `static`, `straight:SPEED` or `arc:SPEED:YAW_RATE`, in m/s and rad/s.
pub fn parse_motion(spec: &str, start: Pose2) -> Result<ConstantTwist, String> {
    let parts: Vec<&str> = spec.trim().split(':').collect();
    let num = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{s}` is not a finite number in trajectory `{spec}`"))
    };
    let twist = match parts.as_slice() {
        ["static"] => Pose2::IDENTITY,
        ["straight", v] => Pose2::new(num(v)?, 0.0, 0.0),
        ["arc", v, w] => Pose2 {
            x: num(v)?,
            y: 0.0,
            theta: num(w)?,
        },
        _ => {
            return Err(format!(
                "unknown trajectory `{spec}` (expected static, straight:SPEED or arc:SPEED:YAW_RATE)"
            ))
        }
    };
    Ok(ConstantTwist {
        start,
        start_time: 0.0,
        twist,
    })
}

pub fn simulate(
    world: &Path,
    motion: &ConstantTwist,
    num_scans: usize,
    config: &RunConfig,
) -> Result<String, CliError> {
    let text = std::fs::read_to_string(world)
        .map_err(|e| CliError::Input(format!("{}: {e}", world.display())))?;
    let world_model =
        World2D::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", world.display())))?;
    let (scans, truth) = render_sequence(&world_model, motion, 0.0, num_scans, &config.sim);
    let archive = ScanArchive::new(scans).map_err(CliError::Input)?;
    std::fs::create_dir_all(&config.output)
        .map_err(|e| CliError::Input(format!("{}: {e}", config.output.display())))?;
    let scans_path = config.output.join("scans.rdr");
    write_scan_archive(&archive, &scans_path).map_err(input)?;
    let truth_path = write(
        &config.output,
        "truth.txt",
        trajectory_to_string(&truth, config.format).as_bytes(),
    )?;
    Ok(format!(
        "simulated {} scans of {} segments\nwrote {}\nwrote {}\n",
        archive.len(),
        world_model.segments().len(),
        scans_path.display(),
        truth_path.display()
    ))
}

fn load_trajectory(path: &Path) -> Result<TrajectoryEstimate, CliError> {
    read_trajectory(path, None).map_err(input)
}

pub fn evaluate(estimate: &Path, truth: &Path, config: &RunConfig) -> Result<String, CliError> {
    let est = load_trajectory(estimate)?;
    let gt = load_trajectory(truth)?;
    let mut report = String::new();
    let mut csv = String::from(EVALUATION_CSV_HEADER);
    csv.push('\n');
    let rpe = relative_pose_error(&est, &gt).ok();
    let rpe_text = rpe.map(|r| r.to_string()).unwrap_or_default();
    match kitti_odometry_error(&est, &gt) {
        Ok(r) => {
            let _ = writeln!(report, "matched poses: {}", r.matched_poses);
            let _ = writeln!(report, "translation error: {:.4} %", r.translation_error_percent);
            let _ = writeln!(
                report,
                "rotation error: {:.4} deg/100m",
                r.rotation_error_deg_per_100m
            );
            for l in &r.per_length {
                let _ = writeln!(
                    report,
                    "  {:>5} m: {:.4} %, {:.4} deg/100m over {} segments",
                    l.length, l.translation_error_percent, l.rotation_error_deg_per_100m, l.segments
                );
                let _ = writeln!(
                    csv,
                    "{},{},{},{},",
                    l.length, l.segments, l.translation_error_percent, l.rotation_error_deg_per_100m
                );
            }
            let segments: usize = r.per_length.iter().map(|l| l.segments).sum();
            let _ = writeln!(
                csv,
                "all,{segments},{},{},{rpe_text}",
                r.translation_error_percent, r.rotation_error_deg_per_100m
            );
        }
        Err(EvalError::PathTooShort { matched, length }) => {
            let _ = writeln!(report, "matched poses: {matched}");
            let _ = writeln!(
                report,
                "segment metrics unavailable: path too short ({length:.3} m)"
            );
            let _ = writeln!(csv, "all,0,,,{rpe_text}");
        }
    }
    match rpe {
        Some(r) => {
            let _ = writeln!(report, "relative pose error: {r:.4} m");
        }
        None => report.push_str("relative pose error unavailable: fewer than 2 matched poses\n"),
    }
    let path = write(&config.output, "evaluation.csv", csv.as_bytes())?;
    let _ = writeln!(report, "wrote {}", path.display());
    Ok(report)
}

pub fn sweep(
    archive: &Path,
    truth: &Path,
    resolutions: &[f64],
    metrics: &[Metric],
    config: &RunConfig,
) -> Result<String, CliError> {
    let scans = load_scans(archive)?;
    let gt = load_trajectory(truth)?;
    let rows = resolution_sweep(scans.scans(), &gt, resolutions, metrics, &config.odometry);
    let path = write(&config.output, "sweep.csv", sweep_to_csv(&rows).as_bytes())?;
    let mut report = String::new();
    for row in &rows {
        let _ = match &row.outcome {
            Ok(c) => writeln!(
                report,
                "r = {:<4} {}: {:.4} %, {:.4} deg/100m, rpe {:.4} m",
                row.resolution,
                row.metric,
                c.translation_error_percent,
                c.rotation_error_deg_per_100m,
                c.rpe
            ),
            Err(e) => writeln!(report, "r = {:<4} {}: failed: {e}", row.resolution, row.metric),
        };
    }
    let _ = writeln!(report, "wrote {}", path.display());
    if rows.iter().all(|r| r.outcome.is_err()) {
        return Err(CliError::Input(format!("{report}every sweep cell failed")));
    }
    Ok(report)
}
