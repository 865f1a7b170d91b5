//! Frame renderers: ground-truth depth, semantic labels, degraded ToF,
//! simulated learned depth, and 2D LiDAR scans.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use super::raycast::{raycast, RayMode};
use super::rng::{stream, STREAM_LEARNED, STREAM_TOF_FRAME, STREAM_TOF_PATTERN};
use super::{CorridorScene, LearnedDepthModel, LidarModel, SynthError, ToFModel};
use crate::frame::{DepthFrame, LabelMap, LidarScan, Pose2, SemClass};
use crate::geometry::{pose_transform, CameraModel};

/// Depth cap for the ground-truth renderer; rays that travel farther hit
/// nothing and the pixel stays 0.
pub const GT_MAX_DEPTH: f64 = 50.0;

/// Confidence written to dropped / no-return ToF pixels (below the fusion
/// threshold tau = 0.5).
pub const DROPPED_CONFIDENCE: f64 = 0.1;

/// Depth used to densify a learned frame when the ground truth contains no
/// valid pixel at all (empty scene).
pub const FALLBACK_DEPTH: f64 = 5.0;

struct CameraRays {
    origin: Point3<f64>,
    dirs: Vec<Vector3<f64>>,
}

fn camera_rays(pose: &Pose2, cam: &CameraModel) -> CameraRays {
    let world_from_cam = pose_transform(pose).compose(&cam.extrinsic);
    let origin = world_from_cam.apply(&Point3::origin());
    let mut dirs = Vec::with_capacity(cam.width * cam.height);
    for v in 0..cam.height {
        for u in 0..cam.width {
            dirs.push(world_from_cam.apply_vector(&cam.ray(u as f64, v as f64)));
        }
    }
    CameraRays { origin, dirs }
}

fn check_pose(scene: &CorridorScene, pose: &Pose2) -> Result<(), SynthError> {
    if scene.contains_xy(pose.x, pose.y) {
        Ok(())
    } else {
        Err(SynthError::PoseOutsideScene {
            x: pose.x,
            y: pose.y,
        })
    }
}

/// Per-pixel ray-cast distance (pinhole depth) to the nearest surface;
/// confidence 1 everywhere; no-hit pixels stay 0.
pub fn render_gt_depth(
    scene: &CorridorScene,
    pose: &Pose2,
    cam: &CameraModel,
    time: f64,
) -> Result<DepthFrame, SynthError> {
    check_pose(scene, pose)?;
    let rays = camera_rays(pose, cam);
    let mut frame = DepthFrame::zeroed(cam.width, cam.height, time);
    for (i, dir) in rays.dirs.iter().enumerate() {
        if let Some(hit) = raycast(scene, time, &rays.origin, dir, GT_MAX_DEPTH, RayMode::Camera) {
            frame.depth[i] = hit.t;
        }
    }
    Ok(frame)
}

/// Per-pixel class of the first-hit surface; no-hit pixels are labeled other.
pub fn render_semantic_labels(
    scene: &CorridorScene,
    pose: &Pose2,
    cam: &CameraModel,
    time: f64,
) -> LabelMap {
    let rays = camera_rays(pose, cam);
    let mut map = LabelMap::filled(cam.width, cam.height, SemClass::Other);
    for (i, dir) in rays.dirs.iter().enumerate() {
        if let Some(hit) = raycast(scene, time, &rays.origin, dir, GT_MAX_DEPTH, RayMode::Camera) {
            map.labels[i] = hit.class;
        }
    }
    map
}

/// Degrade a ground-truth frame into a ToF measurement: additive range noise
/// where the surface is measurable, dropout inside reflective patches, and an
/// optional per-frame intermittent flip of the dropout decision.
///
/// The base dropout pattern depends only on (seed, pixel), so it is stable
/// across a sequence; `frame_index` drives noise and intermittency.
pub fn render_tof_frame(
    gt: &DepthFrame,
    scene: &CorridorScene,
    pose: &Pose2,
    cam: &CameraModel,
    model: &ToFModel,
    seed: u64,
    frame_index: u64,
) -> DepthFrame {
    let rays = camera_rays(pose, cam);
    let mut out = DepthFrame::zeroed(gt.width, gt.height, gt.timestamp);
    let has_patches = !scene.reflective_patches.is_empty();
    for v in 0..gt.height {
        let mut pattern = stream(&[seed, STREAM_TOF_PATTERN, v as u64]);
        let mut per_frame = stream(&[seed, STREAM_TOF_FRAME, frame_index, v as u64]);
        for u in 0..gt.width {
            let u_pattern: f64 = pattern.gen();
            let u_flip: f64 = per_frame.gen();
            let noise: f64 = per_frame.sample(StandardNormal);
            let i = v * gt.width + u;
            let g = gt.depth[i];
            if !(g.is_finite() && g > 0.0) {
                out.depth[i] = 0.0;
                out.confidence[i] = DROPPED_CONFIDENCE;
                continue;
            }
            let p_drop = if has_patches {
                let point = rays.origin + rays.dirs[i] * g;
                scene
                    .reflective_patches
                    .iter()
                    .filter(|p| p.contains(&point))
                    .map(|p| p.p_drop)
                    .fold(0.0, f64::max)
            } else {
                0.0
            };
            let mut dropped = p_drop > 0.0 && u_pattern < p_drop;
            if p_drop > 0.0 && model.intermittency > 0.0 && u_flip < model.intermittency {
                dropped = !dropped;
            }
            if dropped {
                out.depth[i] = 0.0;
                out.confidence[i] = DROPPED_CONFIDENCE;
            } else {
                out.depth[i] = (g + model.sigma * noise).max(0.0);
                out.confidence[i] = 1.0;
            }
        }
    }
    out
}

/// Densify: invalid pixels take the nearest valid value in their row; rows
/// with no valid pixel copy the nearest dense row; a frame with no valid
/// pixel at all falls back to a constant.
fn fill_invalid(gt: &DepthFrame) -> Vec<f64> {
    let (w, h) = (gt.width, gt.height);
    let mut out = gt.depth.clone();
    let valid = |d: f64| d.is_finite() && d > 0.0;
    let mut dense_rows: Vec<usize> = Vec::new();
    for v in 0..h {
        let row = &mut out[v * w..(v + 1) * w];
        if !row.iter().any(|d| valid(*d)) {
            continue;
        }
        dense_rows.push(v);
        // distance to nearest valid pixel on each side
        let mut left: Vec<Option<(usize, f64)>> = vec![None; w];
        let mut carry: Option<(usize, f64)> = None;
        for u in 0..w {
            if valid(row[u]) {
                carry = Some((u, row[u]));
            }
            left[u] = carry;
        }
        carry = None;
        for u in (0..w).rev() {
            if valid(row[u]) {
                carry = Some((u, row[u]));
            }
            if !valid(row[u]) {
                let l = left[u];
                let r = carry;
                row[u] = match (l, r) {
                    (Some((lu, lv)), Some((ru, rv))) => {
                        if u - lu <= ru - u {
                            lv
                        } else {
                            rv
                        }
                    }
                    (Some((_, lv)), None) => lv,
                    (None, Some((_, rv))) => rv,
                    (None, None) => unreachable!(),
                };
            }
        }
    }
    if dense_rows.is_empty() {
        return vec![FALLBACK_DEPTH; w * h];
    }
    for v in 0..h {
        if dense_rows.binary_search(&v).is_ok() {
            continue;
        }
        let nearest = *dense_rows
            .iter()
            .min_by_key(|r| (v as isize - **r as isize).unsigned_abs())
            .unwrap();
        let (a, b) = (v * w, nearest * w);
        for u in 0..w {
            out[a + u] = out[b + u];
        }
    }
    out
}

fn box_filter(data: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return data.to_vec();
    }
    // integral image with a zero row/column border
    let mut integral = vec![0.0f64; (w + 1) * (h + 1)];
    for v in 0..h {
        let mut row_sum = 0.0;
        for u in 0..w {
            row_sum += data[v * w + u];
            integral[(v + 1) * (w + 1) + (u + 1)] = integral[v * (w + 1) + (u + 1)] + row_sum;
        }
    }
    let mut out = vec![0.0f64; w * h];
    let r = radius as isize;
    for v in 0..h {
        let v0 = (v as isize - r).max(0) as usize;
        let v1 = ((v as isize + r) as usize).min(h - 1);
        for u in 0..w {
            let u0 = (u as isize - r).max(0) as usize;
            let u1 = ((u as isize + r) as usize).min(w - 1);
            let sum = integral[(v1 + 1) * (w + 1) + (u1 + 1)]
                - integral[v0 * (w + 1) + (u1 + 1)]
                - integral[(v1 + 1) * (w + 1) + u0]
                + integral[v0 * (w + 1) + u0];
            out[v * w + u] = sum / (((v1 - v0 + 1) * (u1 - u0 + 1)) as f64);
        }
    }
    out
}

/// Simulate a relative-depth prediction from ground truth: densify, divide by
/// the hidden scale, apply multiplicative noise and box smoothing, then paste
/// hallucination patches. The output is dense with confidence 1.
pub fn render_learned_depth(
    gt: &DepthFrame,
    model: &LearnedDepthModel,
    seed: u64,
    frame_index: u64,
) -> DepthFrame {
    let s = model.scale_at(frame_index);
    let (w, h) = (gt.width, gt.height);
    let filled = fill_invalid(gt);
    let mut rel = vec![0.0f64; w * h];
    for v in 0..h {
        let mut rng = stream(&[seed, STREAM_LEARNED, frame_index, v as u64]);
        for u in 0..w {
            let noise: f64 = rng.sample(StandardNormal);
            let i = v * w + u;
            rel[i] = (filled[i] / s * (1.0 + model.sigma * noise)).max(1e-6);
        }
    }
    let mut rel = box_filter(&rel, w, h, model.smoothing_radius);
    for patch in &model.hallucinations {
        for v in patch.v_min..patch.v_max.min(h) {
            for u in patch.u_min..patch.u_max.min(w) {
                let i = v * w + u;
                rel[i] = ((filled[i] + patch.offset) / s).max(1e-6);
            }
        }
    }
    DepthFrame {
        width: w,
        height: h,
        depth: rel,
        confidence: vec![1.0; w * h],
        timestamp: gt.timestamp,
    }
}

/// Cast one horizontal ray per beam at the scan height; glass surfaces are
/// transparent; no return within range yields NaN.
pub fn render_lidar_scan(
    scene: &CorridorScene,
    pose: &Pose2,
    model: &LidarModel,
    time: f64,
) -> LidarScan {
    let origin = Point3::new(pose.x, pose.y, model.scan_height);
    let mut ranges = Vec::with_capacity(model.beam_count);
    for i in 0..model.beam_count {
        let angle = pose.yaw + model.angle_min + model.angle_increment * i as f64;
        let dir = Vector3::new(angle.cos(), angle.sin(), 0.0);
        let r = raycast(scene, time, &origin, &dir, model.range_max, RayMode::Lidar)
            .map_or(f64::NAN, |hit| hit.t);
        ranges.push(r);
    }
    LidarScan {
        angle_min: model.angle_min,
        angle_increment: model.angle_increment,
        ranges,
        scan_height: model.scan_height,
        range_max: model.range_max,
    }
}
