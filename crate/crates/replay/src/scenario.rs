//! Scenario files: a strict JSON schema describing the scene, sensor models,
//! pipeline parameters, and the robot trajectory, plus the named source /
//! inflation configurations a replay can run.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use depthfuse_core::costmap::{
    ClassRadii, CostmapParams, GridConfig, InflationConfig, InflationStrategy, SourceSet,
};
use depthfuse_core::fusion::FusionConfig;
use depthfuse_core::geometry::{CameraModel, GeometryError};
use depthfuse_core::synth::{
    BoxObstacle, CorridorScene, HallucinationPatch, LearnedDepthModel, LidarModel, Pedestrian,
    ReflectivePatch, SynthError, ToFModel, WallClasses,
};
use depthfuse_core::{Pose2, SemClass};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown class name `{0}`")]
    UnknownClass(String),
    #[error("unknown config name `{0}`")]
    UnknownConfig(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn class_from_name(name: &str) -> Result<SemClass, ScenarioError> {
    match name {
        "floor" => Ok(SemClass::Floor),
        "wall" => Ok(SemClass::Wall),
        "person" => Ok(SemClass::Person),
        "furniture" => Ok(SemClass::Furniture),
        "glass" => Ok(SemClass::Glass),
        "other" => Ok(SemClass::Other),
        _ => Err(ScenarioError::UnknownClass(name.to_string())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountSpec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub mount: MountSpec,
}

impl CameraSpec {
    pub fn build(&self) -> Result<CameraModel, ScenarioError> {
        Ok(CameraModel::forward_facing(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            nalgebra_vec(self.mount.x, self.mount.y, self.mount.z),
            self.mount.yaw_deg.to_radians(),
            self.mount.pitch_deg.to_radians(),
        )?)
    }
}

fn nalgebra_vec(x: f64, y: f64, z: f64) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(x, y, z)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallClassSpec {
    pub left: String,
    pub right: String,
    pub near: String,
    pub far: String,
}

impl Default for WallClassSpec {
    fn default() -> Self {
        WallClassSpec {
            left: "wall".into(),
            right: "wall".into(),
            near: "wall".into(),
            far: "wall".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorSpec {
    pub length: f64,
    pub width: f64,
    pub wall_height: f64,
    #[serde(default)]
    pub wall_classes: WallClassSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub class: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub p_drop: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpec {
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub speed: f64,
    pub waypoints: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub corridor: Option<CorridorSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub reflective_patches: Vec<PatchSpec>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianSpec>,
}

impl SceneSpec {
    pub fn build(&self) -> Result<CorridorScene, ScenarioError> {
        let mut scene = match &self.corridor {
            Some(c) => {
                let mut s = CorridorScene::corridor(c.length, c.width, c.wall_height);
                s.wall_classes = WallClasses {
                    left: class_from_name(&c.wall_classes.left)?,
                    right: class_from_name(&c.wall_classes.right)?,
                    near: class_from_name(&c.wall_classes.near)?,
                    far: class_from_name(&c.wall_classes.far)?,
                };
                s
            }
            None => CorridorScene::open(),
        };
        for o in &self.obstacles {
            scene
                .obstacles
                .push(BoxObstacle::new(o.min, o.max, class_from_name(&o.class)?));
        }
        for p in &self.reflective_patches {
            scene.reflective_patches.push(ReflectivePatch {
                min: p.min,
                max: p.max,
                p_drop: p.p_drop,
            });
        }
        for p in &self.pedestrians {
            scene.pedestrians.push(Pedestrian {
                radius: p.radius,
                z_min: p.z_min,
                z_max: p.z_max,
                speed: p.speed,
                waypoints: p.waypoints.clone(),
            });
        }
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TofSpec {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_tof_d_max")]
    pub d_max: f64,
    #[serde(default)]
    pub intermittency: f64,
}

fn default_tof_d_max() -> f64 {
    5.0
}

impl Default for TofSpec {
    fn default() -> Self {
        TofSpec {
            sigma: 0.0,
            d_max: default_tof_d_max(),
            intermittency: 0.0,
        }
    }
}

impl TofSpec {
    pub fn build(&self) -> ToFModel {
        ToFModel {
            sigma: self.sigma,
            d_max: self.d_max,
            intermittency: self.intermittency,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HallucinationSpec {
    pub u_min: usize,
    pub v_min: usize,
    pub u_max: usize,
    pub v_max: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnedSpec {
    pub s_true: f64,
    #[serde(default)]
    pub s_drift_rate: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub smoothing_radius: usize,
    #[serde(default)]
    pub hallucinations: Vec<HallucinationSpec>,
}

impl LearnedSpec {
    pub fn build(&self) -> Result<LearnedDepthModel, ScenarioError> {
        let model = LearnedDepthModel {
            s_true: self.s_true,
            s_drift_rate: self.s_drift_rate,
            sigma: self.sigma,
            smoothing_radius: self.smoothing_radius,
            hallucinations: self
                .hallucinations
                .iter()
                .map(|h| HallucinationPatch {
                    u_min: h.u_min,
                    v_min: h.v_min,
                    u_max: h.u_max,
                    v_max: h.v_max,
                    offset: h.offset,
                })
                .collect(),
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSpec {
    #[serde(default = "default_lidar_angle_min_deg")]
    pub angle_min_deg: f64,
    #[serde(default = "default_lidar_fov_deg")]
    pub fov_deg: f64,
    pub beam_count: usize,
    pub range_max: f64,
    pub scan_height: f64,
}

fn default_lidar_angle_min_deg() -> f64 {
    -180.0
}

fn default_lidar_fov_deg() -> f64 {
    360.0
}

impl LidarSpec {
    pub fn build(&self) -> Result<LidarModel, ScenarioError> {
        if self.beam_count == 0 {
            return Err(ScenarioError::Invalid("lidar needs at least one beam".into()));
        }
        Ok(LidarModel {
            angle_min: self.angle_min_deg.to_radians(),
            angle_increment: self.fov_deg.to_radians() / self.beam_count as f64,
            beam_count: self.beam_count,
            range_max: self.range_max,
            scan_height: self.scan_height,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSpec {
    pub tau: f64,
    pub epsilon: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub min_valid_fraction: f64,
}

impl Default for FusionSpec {
    fn default() -> Self {
        let cfg = FusionConfig::default();
        FusionSpec {
            tau: cfg.tau,
            epsilon: cfg.epsilon,
            d_min: cfg.d_min,
            d_max: cfg.d_max,
            min_valid_fraction: cfg.min_valid_fraction,
        }
    }
}

impl FusionSpec {
    pub fn build(&self) -> Result<FusionConfig, ScenarioError> {
        let cfg = FusionConfig {
            tau: self.tau,
            epsilon: self.epsilon,
            d_min: self.d_min,
            d_max: self.d_max,
            min_valid_fraction: self.min_valid_fraction,
        };
        cfg.validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        let g = GridConfig::default();
        let p = CostmapParams::default();
        GridSpec {
            resolution: g.resolution,
            width: g.width,
            height: g.height,
            h_min: p.h_min,
            h_max: p.h_max,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<CostmapParams, ScenarioError> {
        if self.resolution <= 0.0 || self.width == 0 || self.height == 0 {
            return Err(ScenarioError::Invalid("degenerate grid".into()));
        }
        Ok(CostmapParams {
            grid: GridConfig {
                resolution: self.resolution,
                width: self.width,
                height: self.height,
            },
            h_min: self.h_min,
            h_max: self.h_max,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassRadiiSpec {
    pub person: f64,
    pub glass: f64,
    pub furniture: f64,
    pub wall: f64,
    pub floor: f64,
    pub other: f64,
}

impl Default for ClassRadiiSpec {
    fn default() -> Self {
        let r = ClassRadii::default();
        ClassRadiiSpec {
            person: r.person,
            glass: r.glass,
            furniture: r.furniture,
            wall: r.wall,
            floor: r.floor,
            other: r.other,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InflationSpec {
    pub fixed_radius: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub robot_width: f64,
    pub class_radii: ClassRadiiSpec,
    pub corridor_axis_deg: f64,
}

impl Default for InflationSpec {
    fn default() -> Self {
        let c = InflationConfig::default();
        InflationSpec {
            fixed_radius: c.fixed_radius,
            r_min: c.r_min,
            r_max: c.r_max,
            robot_width: c.robot_width,
            class_radii: ClassRadiiSpec::default(),
            corridor_axis_deg: 0.0,
        }
    }
}

impl InflationSpec {
    pub fn build(&self, strategy: InflationStrategy) -> InflationConfig {
        InflationConfig {
            strategy,
            fixed_radius: self.fixed_radius,
            class_radii: ClassRadii {
                person: self.class_radii.person,
                glass: self.class_radii.glass,
                furniture: self.class_radii.furniture,
                wall: self.class_radii.wall,
                floor: self.class_radii.floor,
                other: self.class_radii.other,
            },
            robot_width: self.robot_width,
            r_min: self.r_min,
            r_max: self.r_max,
            corridor_axis_yaw: self.corridor_axis_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw_deg: f64,
}

impl PoseSpec {
    pub fn build(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.yaw_deg.to_radians())
    }
}

/// Named source / inflation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConfigName {
    Base,
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    LidarOnly,
    LidarTof,
    LidarLearned,
    DepthOnly,
    LidarLearnedDynamic,
}

impl ConfigName {
    pub const ALL: [ConfigName; 12] = [
        ConfigName::Base,
        ConfigName::A1,
        ConfigName::A2,
        ConfigName::A3,
        ConfigName::A4,
        ConfigName::A5,
        ConfigName::A6,
        ConfigName::LidarOnly,
        ConfigName::LidarTof,
        ConfigName::LidarLearned,
        ConfigName::DepthOnly,
        ConfigName::LidarLearnedDynamic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConfigName::Base => "Base",
            ConfigName::A1 => "A1",
            ConfigName::A2 => "A2",
            ConfigName::A3 => "A3",
            ConfigName::A4 => "A4",
            ConfigName::A5 => "A5",
            ConfigName::A6 => "A6",
            ConfigName::LidarOnly => "L",
            ConfigName::LidarTof => "L+S",
            ConfigName::LidarLearned => "L+D",
            ConfigName::DepthOnly => "D",
            ConfigName::LidarLearnedDynamic => "L+D+dyn",
        }
    }

    /// Sensor sources and inflation strategy the name stands for.
    pub fn mapping(self) -> (SourceSet, InflationStrategy) {
        use InflationStrategy::*;
        let set = |l, s, d| SourceSet {
            lidar: l,
            hardware: s,
            learned: d,
        };
        match self {
            ConfigName::Base => (set(true, true, false), Fixed),
            ConfigName::A1 => (set(true, true, false), CorridorWidth),
            ConfigName::A2 => (set(true, true, true), Fixed),
            ConfigName::A3 => (set(true, true, true), CorridorWidth),
            ConfigName::A4 => (set(false, false, true), CorridorWidth),
            ConfigName::A5 => (set(true, true, true), ClassAware),
            ConfigName::A6 => (set(false, false, true), ClassAware),
            ConfigName::LidarOnly => (set(true, false, false), Fixed),
            ConfigName::LidarTof => (set(true, true, false), Fixed),
            ConfigName::LidarLearned => (set(true, false, true), Fixed),
            ConfigName::DepthOnly => (set(false, false, true), Fixed),
            ConfigName::LidarLearnedDynamic => (set(true, false, true), Dynamic),
        }
    }
}

impl std::fmt::Display for ConfigName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConfigName {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConfigName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownConfig(s.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub frames: usize,
    pub dt: f64,
    pub camera: CameraSpec,
    pub scene: SceneSpec,
    #[serde(default)]
    pub tof: TofSpec,
    pub learned: LearnedSpec,
    pub lidar: LidarSpec,
    #[serde(default)]
    pub fusion: FusionSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub inflation: InflationSpec,
    #[serde(default = "default_detection_tolerance")]
    pub detection_tolerance: f64,
    /// One pose means a static robot for all frames; otherwise the length
    /// must equal `frames`.
    pub trajectory: Vec<PoseSpec>,
    /// Configs a plain `replay run` without `--configs` executes.
    #[serde(default)]
    pub configs: Vec<String>,
}

fn default_detection_tolerance() -> f64 {
    0.1
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.frames == 0 {
            return Err(ScenarioError::Invalid("frames must be positive".into()));
        }
        if self.dt <= 0.0 {
            return Err(ScenarioError::Invalid("dt must be positive".into()));
        }
        if self.trajectory.is_empty() {
            return Err(ScenarioError::Invalid("trajectory must not be empty".into()));
        }
        if self.trajectory.len() != 1 && self.trajectory.len() != self.frames {
            return Err(ScenarioError::Invalid(format!(
                "trajectory length {} must be 1 or match frames {}",
                self.trajectory.len(),
                self.frames
            )));
        }
        for name in &self.configs {
            ConfigName::from_str(name)?;
        }
        self.scene.build()?;
        self.camera.build()?;
        self.learned.build()?;
        self.lidar.build()?;
        self.fusion.build()?;
        self.grid.build()?;
        Ok(())
    }

    /// Pose for frame `k`, with single-pose trajectories repeated.
    pub fn pose_at(&self, k: usize) -> Pose2 {
        if self.trajectory.len() == 1 {
            self.trajectory[0].build()
        } else {
            self.trajectory[k].build()
        }
    }

    pub fn default_configs(&self) -> Result<Vec<ConfigName>, ScenarioError> {
        if self.configs.is_empty() {
            Ok(vec![ConfigName::Base])
        } else {
            self.configs.iter().map(|n| ConfigName::from_str(n)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> serde_json::Value {
        serde_json::json!({
            "name": "test",
            "frames": 2,
            "dt": 0.1,
            "camera": {
                "fx": 100.0, "fy": 100.0, "cx": 40.0, "cy": 30.0,
                "width": 80, "height": 60,
                "mount": {"x": 0.0, "y": 0.0, "z": 0.5}
            },
            "scene": {
                "corridor": {"length": 10.0, "width": 2.0, "wall_height": 2.0}
            },
            "learned": {"s_true": 2.0},
            "lidar": {"beam_count": 90, "range_max": 8.0, "scan_height": 0.18},
            "trajectory": [{"x": 1.0, "y": 0.0}]
        })
    }

    #[test]
    fn minimal_scenario_parses_and_fills_defaults() {
        let s = Scenario::from_json(&minimal_json().to_string()).unwrap();
        assert_eq!(s.fusion.tau, 0.5);
        assert_eq!(s.grid.width, 120);
        assert_eq!(s.inflation.fixed_radius, 0.09);
        assert_eq!(s.detection_tolerance, 0.1);
        assert_eq!(s.pose_at(1).x, 1.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = minimal_json();
        v["surprise"] = serde_json::json!(1);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(ScenarioError::Parse(_))
        ));
        let mut v = minimal_json();
        v["camera"]["zoom"] = serde_json::json!(2.0);
        assert!(Scenario::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn bad_trajectory_length_is_rejected() {
        let mut v = minimal_json();
        v["trajectory"] = serde_json::json!([
            {"x": 1.0, "y": 0.0}, {"x": 1.1, "y": 0.0}, {"x": 1.2, "y": 0.0}
        ]);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn unknown_class_and_config_names_are_rejected() {
        let mut v = minimal_json();
        v["scene"]["obstacles"] =
            serde_json::json!([{"min": [1.0, 0.0, 0.0], "max": [2.0, 1.0, 1.0], "class": "dragon"}]);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(ScenarioError::UnknownClass(_))
        ));
        let mut v = minimal_json();
        v["configs"] = serde_json::json!(["Base", "Z9"]);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(ScenarioError::UnknownConfig(_))
        ));
    }

    #[test]
    fn config_names_round_trip_and_map_to_sources() {
        for c in ConfigName::ALL {
            assert_eq!(ConfigName::from_str(c.as_str()).unwrap(), c);
        }
        let (set, strat) = ConfigName::Base.mapping();
        assert!(set.lidar && set.hardware && !set.learned);
        assert_eq!(strat, InflationStrategy::Fixed);
        let (set, strat) = ConfigName::A4.mapping();
        assert!(!set.lidar && !set.hardware && set.learned);
        assert_eq!(strat, InflationStrategy::CorridorWidth);
        let (set, strat) = ConfigName::LidarLearnedDynamic.mapping();
        assert!(set.lidar && !set.hardware && set.learned);
        assert_eq!(strat, InflationStrategy::Dynamic);
    }
}
