//! Parametric corridor scenes with analytic ray casting, plus the sensor
//! models (ToF failure, 2D LiDAR, simulated learned depth) that turn a scene
//! into the frames the pipeline consumes. Scenes are planes, boxes, and
//! cylinders with exact intersections so expected values stay hand-derivable.

mod raycast;
mod render;
pub mod rng;

pub use raycast::{raycast, Hit, RayMode};
pub use render::{
    render_gt_depth, render_learned_depth, render_lidar_scan, render_semantic_labels,
    render_tof_frame, DROPPED_CONFIDENCE, FALLBACK_DEPTH, GT_MAX_DEPTH,
};

use thiserror::Error;

use crate::frame::SemClass;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("pose ({x:.3}, {y:.3}) is outside the corridor")]
    PoseOutsideScene { x: f64, y: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid sensor model: {0}")]
    InvalidModel(String),
}

/// Axis-aligned box obstacle with a semantic class.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxObstacle {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub class: SemClass,
}

impl BoxObstacle {
    pub fn new(min: [f64; 3], max: [f64; 3], class: SemClass) -> Self {
        BoxObstacle { min, max, class }
    }
}

/// Axis-aligned box region in which ToF returns drop out with probability
/// `p_drop`. Thin boxes straddling a floor, wall, or obstacle surface model
/// the reflective patches that defeat the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivePatch {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub p_drop: f64,
}

impl ReflectivePatch {
    pub fn contains(&self, p: &nalgebra::Point3<f64>) -> bool {
        const EPS: f64 = 1e-9;
        (0..3).all(|i| p[i] >= self.min[i] - EPS && p[i] <= self.max[i] + EPS)
    }
}

/// Vertical cylinder following a waypoint path at constant speed; class is
/// always person. `z_min > 0` keeps the body above a low LiDAR scan plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Meters per second along the waypoint polyline; ignored with a single
    /// waypoint.
    pub speed: f64,
    pub waypoints: Vec<[f64; 2]>,
}

impl Pedestrian {
    /// Center at time `t`: piecewise-linear along the waypoints, stopping at
    /// the final one.
    pub fn center_at(&self, t: f64) -> [f64; 2] {
        match self.waypoints.len() {
            0 => [0.0, 0.0],
            1 => self.waypoints[0],
            _ => {
                let mut remaining = self.speed.max(0.0) * t.max(0.0);
                for pair in self.waypoints.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let seg = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    if remaining <= seg || seg == 0.0 {
                        if seg == 0.0 {
                            continue;
                        }
                        let f = remaining / seg;
                        return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
                    }
                    remaining -= seg;
                }
                *self.waypoints.last().unwrap()
            }
        }
    }
}

/// Semantic classes of the four corridor walls (left = +y side when facing
/// +x). A glass wall is transparent to the LiDAR but still a camera surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallClasses {
    pub left: SemClass,
    pub right: SemClass,
    pub near: SemClass,
    pub far: SemClass,
}

impl Default for WallClasses {
    fn default() -> Self {
        WallClasses {
            left: SemClass::Wall,
            right: SemClass::Wall,
            near: SemClass::Wall,
            far: SemClass::Wall,
        }
    }
}

/// Parametric world: a corridor shell along +x (floor z = 0, walls at
/// y = ±width/2, end walls at x = 0 and x = length) plus boxes, reflective
/// patches, and pedestrians. Zero length or width removes the shell and
/// leaves an open scene containing only the listed objects.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorScene {
    pub length: f64,
    pub width: f64,
    pub wall_height: f64,
    pub wall_classes: WallClasses,
    pub obstacles: Vec<BoxObstacle>,
    pub reflective_patches: Vec<ReflectivePatch>,
    pub pedestrians: Vec<Pedestrian>,
}

impl CorridorScene {
    pub fn corridor(length: f64, width: f64, wall_height: f64) -> Self {
        CorridorScene {
            length,
            width,
            wall_height,
            wall_classes: WallClasses::default(),
            obstacles: Vec::new(),
            reflective_patches: Vec::new(),
            pedestrians: Vec::new(),
        }
    }

    /// Scene without a corridor shell: no floor, no walls.
    pub fn open() -> Self {
        Self::corridor(0.0, 0.0, 0.0)
    }

    pub fn has_shell(&self) -> bool {
        self.length > 0.0 && self.width > 0.0 && self.wall_height > 0.0
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        !self.has_shell() || (x > 0.0 && x < self.length && y.abs() < self.width / 2.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for p in &self.reflective_patches {
            if !(0.0..=1.0).contains(&p.p_drop) {
                return Err(SynthError::InvalidScene(format!(
                    "patch p_drop {} outside [0, 1]",
                    p.p_drop
                )));
            }
        }
        for o in &self.obstacles {
            for i in 0..3 {
                if o.min[i] >= o.max[i] {
                    return Err(SynthError::InvalidScene(
                        "obstacle box has empty extent".into(),
                    ));
                }
            }
            if self.has_shell() {
                let inside = o.min[0] >= 0.0
                    && o.max[0] <= self.length
                    && o.min[1] >= -self.width / 2.0
                    && o.max[1] <= self.width / 2.0
                    && o.min[2] >= 0.0;
                if !inside {
                    return Err(SynthError::InvalidScene(
                        "obstacle lies outside the corridor volume".into(),
                    ));
                }
            }
        }
        for p in &self.pedestrians {
            if p.radius <= 0.0 || p.z_min >= p.z_max || p.waypoints.is_empty() {
                return Err(SynthError::InvalidScene("degenerate pedestrian".into()));
            }
        }
        Ok(())
    }
}

/// ToF sensor degradation model.
#[derive(Debug, Clone, PartialEq)]
pub struct ToFModel {
    /// Additive Gaussian range noise, meters.
    pub sigma: f64,
    /// Indoor validity cutoff, meters; returns beyond it are gated out
    /// downstream, not clipped here.
    pub d_max: f64,
    /// Per-frame probability that a reflective-patch pixel flips its dropout
    /// state, producing the flicker the jitter metrics measure.
    pub intermittency: f64,
}

impl Default for ToFModel {
    fn default() -> Self {
        ToFModel {
            sigma: 0.0,
            d_max: 5.0,
            intermittency: 0.0,
        }
    }
}

/// Image-space rectangle (half-open) replaced with offset depth to emulate a
/// hallucinating predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct HallucinationPatch {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
    /// Meters added to the ground-truth depth inside the rectangle.
    pub offset: f64,
}

/// Simulated relative-depth predictor. The hidden inverse scale `s_true` is
/// what the calibration stage must recover.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedDepthModel {
    pub s_true: f64,
    /// Optional per-frame drift: the frame-k scale is s_true * (1 + rate * k).
    pub s_drift_rate: f64,
    /// Multiplicative Gaussian noise.
    pub sigma: f64,
    /// Box-filter half-width in pixels; 0 disables smoothing.
    pub smoothing_radius: usize,
    pub hallucinations: Vec<HallucinationPatch>,
}

impl LearnedDepthModel {
    pub fn exact(s_true: f64) -> Self {
        LearnedDepthModel {
            s_true,
            s_drift_rate: 0.0,
            sigma: 0.0,
            smoothing_radius: 0,
            hallucinations: Vec::new(),
        }
    }

    pub fn scale_at(&self, frame_index: u64) -> f64 {
        self.s_true * (1.0 + self.s_drift_rate * frame_index as f64)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.s_true <= 0.0 {
            return Err(SynthError::InvalidModel("s_true must be positive".into()));
        }
        if self.sigma < 0.0 {
            return Err(SynthError::InvalidModel("sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// 2D LiDAR model: evenly spaced horizontal rays at `scan_height`.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarModel {
    /// Angle of the first beam relative to the robot heading, radians.
    pub angle_min: f64,
    pub angle_increment: f64,
    pub beam_count: usize,
    pub range_max: f64,
    pub scan_height: f64,
}

impl LidarModel {
    /// Full 360 degree scan with `beam_count` beams.
    pub fn full_circle(beam_count: usize, range_max: f64, scan_height: f64) -> Self {
        LidarModel {
            angle_min: -std::f64::consts::PI,
            angle_increment: std::f64::consts::TAU / beam_count as f64,
            beam_count,
            range_max,
            scan_height,
        }
    }
}
