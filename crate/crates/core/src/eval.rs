//! Odometry error metrics.
//!
//! The segment metric follows the usual odometry-benchmark recipe: for every start frame
//! and every path length `L` in 100..=800 m along the ground truth, compare the relative
//! motion over that stretch between estimate and truth. Translation errors are reported
//! in percent of `L`, rotation errors in degrees per 100 m.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::filter::PolarScan;
use crate::geometry::Pose2;
use crate::io::TrajectoryEstimate;
use crate::odometry::{run_odometry, OdometryParams};
use crate::registration::Metric;

pub const SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("path too short: {matched} matched poses covering {length:.3} m")]
    PathTooShort { matched: usize, length: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthError {
    pub length: f64,
    pub segments: usize,
    pub translation_error_percent: f64,
    pub rotation_error_deg_per_100m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdomErrorReport {
    pub translation_error_percent: f64,
    pub rotation_error_deg_per_100m: f64,
    /// Only lengths with at least one segment are listed.
    pub per_length: Vec<LengthError>,
    pub rpe_mean: f64,
    pub matched_poses: usize,
}

/// Pairs `(estimate, truth)` poses by nearest timestamp. A pair is kept when the time
/// offset is at most half the median ground-truth frame period.
pub fn align(estimate: &TrajectoryEstimate, truth: &TrajectoryEstimate) -> Vec<(Pose2, Pose2)> {
    let est = estimate.entries();
    let gt = truth.entries();
    if est.is_empty() || gt.is_empty() {
        return Vec::new();
    }
    let tolerance = match median_period(gt).or_else(|| median_period(est)) {
        Some(p) => 0.5 * p + 1e-9,
        None => 1e-9,
    };
    let mut out = Vec::with_capacity(gt.len());
    for &(t, truth_pose) in gt {
        let i = est.partition_point(|e| e.0 < t);
        let candidates = [i.checked_sub(1), (i < est.len()).then_some(i)];
        let nearest = candidates
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (est[a].0 - t).abs().total_cmp(&(est[b].0 - t).abs()));
        if let Some(j) = nearest {
            if (est[j].0 - t).abs() <= tolerance {
                out.push((est[j].1, truth_pose));
            }
        }
    }
    out
}

fn median_period(entries: &[(f64, Pose2)]) -> Option<f64> {
    let mut d: Vec<f64> = entries.windows(2).map(|w| w[1].0 - w[0].0).collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}

fn relative(a: &Pose2, b: &Pose2) -> Pose2 {
    a.inverse().compose(b)
}

/// Segment-based translation and rotation error over the default lengths.
pub fn kitti_odometry_error(
    estimate: &TrajectoryEstimate,
    truth: &TrajectoryEstimate,
) -> Result<OdomErrorReport, EvalError> {
    kitti_odometry_error_with_lengths(estimate, truth, &SEGMENT_LENGTHS)
}

pub fn kitti_odometry_error_with_lengths(
    estimate: &TrajectoryEstimate,
    truth: &TrajectoryEstimate,
    lengths: &[f64],
) -> Result<OdomErrorReport, EvalError> {
    let pairs = align(estimate, truth);
    let mut dist = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (i, (_, gt)) in pairs.iter().enumerate() {
        if i > 0 {
            acc += gt.translation().distance(pairs[i - 1].1.translation());
        }
        dist.push(acc);
    }

    let mut per_length = Vec::new();
    let (mut t_sum, mut r_sum, mut count) = (0.0, 0.0, 0usize);
    for &len in lengths {
        let (mut lt, mut lr, mut n) = (0.0, 0.0, 0usize);
        for first in 0..pairs.len() {
            // First frame at least `len` further along the path.
            let last = dist.partition_point(|&d| d < dist[first] + len);
            if last >= pairs.len() {
                break;
            }
            let gt_delta = relative(&pairs[first].1, &pairs[last].1);
            let est_delta = relative(&pairs[first].0, &pairs[last].0);
            let err = est_delta.inverse().compose(&gt_delta);
            lt += err.translation().norm() / len;
            lr += err.theta.abs() / len;
            n += 1;
        }
        if n > 0 {
            per_length.push(LengthError {
                length: len,
                segments: n,
                translation_error_percent: 100.0 * lt / n as f64,
                rotation_error_deg_per_100m: 100.0 * lr.to_degrees() / n as f64,
            });
            t_sum += lt;
            r_sum += lr;
            count += n;
        }
    }
    if count == 0 {
        return Err(EvalError::PathTooShort {
            matched: pairs.len(),
            length: dist.last().copied().unwrap_or(0.0),
        });
    }
    Ok(OdomErrorReport {
        translation_error_percent: 100.0 * t_sum / count as f64,
        rotation_error_deg_per_100m: 100.0 * r_sum.to_degrees() / count as f64,
        per_length,
        rpe_mean: rpe_of_pairs(&pairs).unwrap_or(0.0),
        matched_poses: pairs.len(),
    })
}

fn rpe_of_pairs(pairs: &[(Pose2, Pose2)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let sum: f64 = pairs
        .windows(2)
        .map(|w| {
            let rel_est = relative(&w[0].0, &w[1].0);
            let rel_gt = relative(&w[0].1, &w[1].1);
            rel_gt.inverse().compose(&rel_est).translation().norm()
        })
        .sum();
    Some(sum / (pairs.len() - 1) as f64)
}

/// Mean translational discrepancy between consecutive-frame relative poses, in meters.
pub fn relative_pose_error(
    estimate: &TrajectoryEstimate,
    truth: &TrajectoryEstimate,
) -> Result<f64, EvalError> {
    let pairs = align(estimate, truth);
    rpe_of_pairs(&pairs).ok_or(EvalError::PathTooShort {
        matched: pairs.len(),
        length: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub translation_error_percent: f64,
    pub rotation_error_deg_per_100m: f64,
    pub rpe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub resolution: f64,
    pub metric: Metric,
    pub outcome: Result<SweepCell, String>,
}

/// Runs the full pipeline for every `(resolution, metric)` pair and evaluates it against
/// `truth`. Cells run in parallel; rows come back resolution-major in input order.
pub fn resolution_sweep(
    scans: &[PolarScan],
    truth: &TrajectoryEstimate,
    resolutions: &[f64],
    metrics: &[Metric],
    base: &OdometryParams,
) -> Vec<SweepRow> {
    let cells: Vec<(f64, Metric)> = resolutions
        .iter()
        .flat_map(|&r| metrics.iter().map(move |&m| (r, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(resolution, metric)| {
            let mut params = base.clone().with_resolution(resolution);
            params.registration.metric = metric;
            SweepRow {
                resolution,
                metric,
                outcome: evaluate_run(scans, truth, &params),
            }
        })
        .collect()
}

fn evaluate_run(
    scans: &[PolarScan],
    truth: &TrajectoryEstimate,
    params: &OdometryParams,
) -> Result<SweepCell, String> {
    if scans.is_empty() {
        return Err("no scans".into());
    }
    let (estimate, _) = run_odometry(scans, params).map_err(|e| e.to_string())?;
    let report = kitti_odometry_error(&estimate, truth).map_err(|e| e.to_string())?;
    Ok(SweepCell {
        translation_error_percent: report.translation_error_percent,
        rotation_error_deg_per_100m: report.rotation_error_deg_per_100m,
        rpe: report.rpe_mean,
    })
}

pub const SWEEP_CSV_HEADER: &str = "resolution,metric,trans_err_pct,rot_err_deg_per_100m,rpe_m";

/// Failed cells are written with `NaN` metrics.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let (t, r, e) = match &row.outcome {
            Ok(c) => (
                c.translation_error_percent,
                c.rotation_error_deg_per_100m,
                c.rpe,
            ),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        let _ = writeln!(out, "{},{},{},{},{}", row.resolution, row.metric, t, r, e);
    }
    out
}
