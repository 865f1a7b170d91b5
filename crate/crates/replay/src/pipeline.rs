//! Sequence generation and offline replay: render a bundle from a scenario,
//! rebuild per-frame costmaps under named configurations, and score them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use depthfuse_core::costmap::{
    build_frame_costmap, CostmapError, FrameBundle, OccupancyGrid, SourceSet,
};
use depthfuse_core::fusion::{
    apply_scale, estimate_scale, fuse_depth, FusedFrame, FusionError,
};
use depthfuse_core::metrics::{
    centroid_drift, clearance, depth_metrics, detection_rate, fpr_decompose, iou,
    occupancy_jitter, DepthMetrics, Footprint, FprReport, GroundTruth, MetricsError,
};
use depthfuse_core::synth::{
    render_gt_depth, render_learned_depth, render_lidar_scan, render_semantic_labels,
    render_tof_frame, SynthError,
};

use crate::bundle::{
    load_bundle, write_frame_file, write_manifest, write_scan, scan_path, Bundle, BundleError,
    Manifest, SequenceFrame,
};
use crate::report;
use crate::scenario::{ConfigName, PoseSpec, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Costmap(#[from] CostmapError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("frame index {frame} out of range (bundle has {frames} frames)")]
    FrameOutOfRange { frame: usize, frames: usize },
}

impl PipelineError {
    /// Exit code per the CLI contract: 2 for scenario/config problems, 3 for
    /// data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Scenario(_) => 2,
            PipelineError::Synth(_) => 2,
            PipelineError::FrameOutOfRange { .. } => 2,
            PipelineError::Bundle(BundleError::Scenario(_)) => 2,
            PipelineError::Bundle(_) => 3,
            PipelineError::Io { .. } => 3,
            PipelineError::Fusion(_) => 3,
            PipelineError::Costmap(_) => 3,
            PipelineError::Metrics(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Render every frame of a scenario into a bundle directory.
pub fn generate_sequence(
    scenario: &Scenario,
    seed: u64,
    out: &Path,
) -> Result<(), PipelineError> {
    scenario.validate()?;
    let scene = scenario.scene.build()?;
    let cam = scenario.camera.build()?;
    let tof_model = scenario.tof.build();
    let learned_model = scenario.learned.build()?;
    let lidar_model = scenario.lidar.build()?;

    fs::create_dir_all(out.join("frames")).map_err(io_err(out))?;
    fs::create_dir_all(out.join("lidar")).map_err(io_err(out))?;

    let mut poses = Vec::with_capacity(scenario.frames);
    let mut times = Vec::with_capacity(scenario.frames);
    for k in 0..scenario.frames {
        let pose = scenario.pose_at(k);
        let time = k as f64 * scenario.dt;
        let gt = render_gt_depth(&scene, &pose, &cam, time)?;
        let labels = render_semantic_labels(&scene, &pose, &cam, time);
        let tof = render_tof_frame(&gt, &scene, &pose, &cam, &tof_model, seed, k as u64);
        let learned = render_learned_depth(&gt, &learned_model, seed, k as u64);
        let scan = render_lidar_scan(&scene, &pose, &lidar_model, time);
        write_frame_file(out, k, &gt, &labels, &tof, &learned)?;
        write_scan(&scan_path(out, k), &scan)?;
        poses.push(PoseSpec {
            x: pose.x,
            y: pose.y,
            yaw_deg: pose.yaw.to_degrees(),
        });
        times.push(time);
    }
    write_manifest(
        out,
        &Manifest {
            format: "bundle-v1".into(),
            seed,
            frames: scenario.frames,
            dt: scenario.dt,
            scenario: scenario.clone(),
            poses,
            times,
        },
    )?;
    Ok(())
}

/// Ground-truth footprints at a point in time: discrete obstacles that count
/// for detection, and static structure that counts as real surface.
pub fn ground_truth_at(scenario: &Scenario, time: f64) -> GroundTruth {
    let mut gt = GroundTruth::default();
    for o in &scenario.scene.obstacles {
        gt.obstacles.push(Footprint::Rect {
            min: [o.min[0], o.min[1]],
            max: [o.max[0], o.max[1]],
        });
    }
    for p in &scenario.scene.pedestrians {
        // piecewise-linear walk; mirror the renderer's motion model
        let ped = depthfuse_core::synth::Pedestrian {
            radius: p.radius,
            z_min: p.z_min,
            z_max: p.z_max,
            speed: p.speed,
            waypoints: p.waypoints.clone(),
        };
        let c = ped.center_at(time);
        gt.obstacles.push(Footprint::Circle {
            center: c,
            radius: p.radius,
        });
    }
    if let Some(c) = &scenario.scene.corridor {
        let half = c.width / 2.0;
        gt.structure.push(Footprint::Rect {
            min: [0.0, half],
            max: [c.length, half],
        });
        gt.structure.push(Footprint::Rect {
            min: [0.0, -half],
            max: [c.length, -half],
        });
        gt.structure.push(Footprint::Rect {
            min: [0.0, -half],
            max: [0.0, half],
        });
        gt.structure.push(Footprint::Rect {
            min: [c.length, -half],
            max: [c.length, half],
        });
    }
    gt
}

/// Build the costmap a named configuration produces for one frame. Returns
/// the grid and whether scale calibration succeeded (false means the frame
/// fell back to hardware depth only).
pub fn build_config_grid(
    name: ConfigName,
    scenario: &Scenario,
    frame: &SequenceFrame,
) -> Result<(OccupancyGrid, bool), PipelineError> {
    let (mut sources, strategy) = name.mapping();
    let inflation = scenario.inflation.build(strategy);
    let fusion_cfg = scenario.fusion.build()?;
    let cam = scenario.camera.build()?;
    let params = scenario.grid.build()?;

    let mut fused: Option<FusedFrame> = None;
    let mut scale_ok = true;
    if sources.learned {
        match estimate_scale(&frame.learned, &frame.tof, &fusion_cfg) {
            Ok(est) => {
                let scaled = apply_scale(&frame.learned, est.s)?;
                fused = Some(fuse_depth(&frame.tof, &scaled, &fusion_cfg)?);
            }
            Err(FusionError::UnreliableScale { .. }) => {
                // calibration starved: drop learned depth, lean on hardware
                sources = SourceSet {
                    learned: false,
                    hardware: true,
                    ..sources
                };
                scale_ok = false;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let bundle = FrameBundle {
        scan: &frame.scan,
        tof: &frame.tof,
        fused: fused.as_ref(),
        labels: &frame.labels,
        pose: frame.pose,
    };
    let grid = build_frame_costmap(sources, &inflation, &bundle, &cam, &fusion_cfg, &params)?;
    Ok((grid, scale_ok))
}

/// Everything scored for one frame of one configuration.
#[derive(Debug, Clone)]
pub struct FrameScore {
    pub frame: usize,
    pub occupied_count: usize,
    pub inflated_count: usize,
    pub iou: f64,
    pub detection_rate: Option<f64>,
    pub fpr: FprReport,
    pub clearance: f64,
    pub scale_ok: bool,
    pub build_ms: f64,
}

/// Sequence-level results for one configuration.
#[derive(Debug, Clone)]
pub struct ConfigScore {
    pub name: ConfigName,
    pub frames: Vec<FrameScore>,
    pub jitter: f64,
    pub centroid_drift: f64,
}

/// Replay output for a set of configurations.
#[derive(Debug)]
pub struct ReplaySummary {
    pub baseline: ConfigName,
    pub configs: Vec<ConfigScore>,
}

/// Comparison baseline: `Base` when requested, else `L`, else the first
/// configuration in the list.
pub fn pick_baseline(configs: &[ConfigName]) -> ConfigName {
    if configs.contains(&ConfigName::Base) {
        ConfigName::Base
    } else if configs.contains(&ConfigName::LidarOnly) {
        ConfigName::LidarOnly
    } else {
        configs[0]
    }
}

/// Rebuild costmaps for each configuration, score them against the baseline
/// configuration and scenario ground truth, and write the report CSVs.
/// Wall-time build latency is only persisted when `timing` is set so report
/// files stay run-to-run identical.
pub fn run_replay(
    bundle: &Bundle,
    configs: &[ConfigName],
    out: &Path,
    timing: bool,
) -> Result<ReplaySummary, PipelineError> {
    assert!(!configs.is_empty());
    let scenario = &bundle.manifest.scenario;
    let baseline = pick_baseline(configs);
    fs::create_dir_all(out).map_err(io_err(out))?;

    // baseline grids first; every other config is compared against them
    let mut baseline_grids = Vec::with_capacity(bundle.frames.len());
    for frame in &bundle.frames {
        baseline_grids.push(build_config_grid(baseline, scenario, frame)?.0);
    }

    let surface_tol = scenario.grid.resolution;
    let mut scored = Vec::new();
    for &name in configs {
        let mut grids = Vec::with_capacity(bundle.frames.len());
        let mut frames = Vec::with_capacity(bundle.frames.len());
        for (k, frame) in bundle.frames.iter().enumerate() {
            let start = Instant::now();
            let (grid, scale_ok) = build_config_grid(name, scenario, frame)?;
            let build_ms = start.elapsed().as_secs_f64() * 1e3;
            let gt = ground_truth_at(scenario, frame.time);
            let score = FrameScore {
                frame: k,
                occupied_count: grid.obstacle_count(),
                inflated_count: grid.inflated_count(),
                iou: iou(&grid, &baseline_grids[k])?,
                detection_rate: detection_rate(&grid, &gt.obstacles, scenario.detection_tolerance),
                fpr: fpr_decompose(&grid, &baseline_grids[k], &gt, surface_tol)?,
                clearance: clearance(&grid),
                scale_ok,
                build_ms,
            };
            frames.push(score);
            grids.push(grid);
        }
        let jitter = occupancy_jitter(&grids).unwrap_or(0.0);
        let drift = centroid_drift(&grids).unwrap_or(0.0);
        scored.push(ConfigScore {
            name,
            frames,
            jitter,
            centroid_drift: drift,
        });
    }

    let summary = ReplaySummary {
        baseline,
        configs: scored,
    };
    report::write_reports(out, &summary, timing).map_err(|e| PipelineError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    Ok(summary)
}

/// Per-frame depth accuracy of the scale-calibrated learned depth and the
/// fused depth against ground truth, restricted to a depth band.
#[derive(Debug, Clone)]
pub struct DepthEvalRow {
    pub frame: usize,
    pub source: &'static str,
    pub metrics: DepthMetrics,
}

pub fn run_depth_eval(
    bundle: &Bundle,
    band: (f64, f64),
    out: &Path,
) -> Result<Vec<DepthEvalRow>, PipelineError> {
    let fusion_cfg = bundle.manifest.scenario.fusion.build()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut rows = Vec::new();
    for (k, frame) in bundle.frames.iter().enumerate() {
        let est = estimate_scale(&frame.learned, &frame.tof, &fusion_cfg)?;
        let scaled = apply_scale(&frame.learned, est.s)?;
        let fused = fuse_depth(&frame.tof, &scaled, &fusion_cfg)?;
        rows.push(DepthEvalRow {
            frame: k,
            source: "learned_scaled",
            metrics: depth_metrics(&scaled, &frame.gt, band.0, band.1)?,
        });
        rows.push(DepthEvalRow {
            frame: k,
            source: "fused",
            metrics: depth_metrics(&fused.depth, &frame.gt, band.0, band.1)?,
        });
    }
    report::write_depth_report(out, band, &rows).map_err(|e| PipelineError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    Ok(rows)
}

/// Load a bundle and render one configuration's grid for one frame as text.
pub fn dump_grid(
    dir: &Path,
    name: ConfigName,
    frame: usize,
    provenance: bool,
) -> Result<String, PipelineError> {
    let bundle = load_bundle(dir)?;
    if frame >= bundle.frames.len() {
        return Err(PipelineError::FrameOutOfRange {
            frame,
            frames: bundle.frames.len(),
        });
    }
    let (grid, _) = build_config_grid(name, &bundle.manifest.scenario, &bundle.frames[frame])?;
    Ok(if provenance {
        grid.dump_provenance()
    } else {
        grid.dump_text()
    })
}
