//! Robot-centered 2D occupancy costmap: obstacle marking from LiDAR and
//! depth point clouds, inflation strategies, per-cell provenance and class.
//!
//! The grid is a rolling window centered on the robot, axis-aligned with the
//! world frame, rebuilt per frame with no temporal persistence. The origin is
//! snapped to the cell size so a static robot produces identical grids.

use thiserror::Error;

use crate::frame::{DepthFrame, LabelMap, LidarScan, Pose2, SemClass};
use crate::fusion::{FusedFrame, FusionConfig, FusionError, FusionSource};
use crate::geometry::{
    back_project, height_band_filter, pose_transform, transform_points, CameraModel,
    GeometryError,
};

pub const PROV_LIDAR: u8 = 1 << 0;
pub const PROV_TOF: u8 = 1 << 1;
pub const PROV_LEARNED: u8 = 1 << 2;
pub const PROV_INFLATION: u8 = 1 << 3;

#[derive(Debug, Error)]
pub enum CostmapError {
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("class-aware inflation requested but the grid has no class data")]
    MissingClassData,
    #[error("invalid costmap config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Free,
    Obstacle,
    Inflated,
}

/// Sensor source recorded in cell provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Lidar,
    Tof,
    Learned,
}

impl Source {
    pub fn bit(self) -> u8 {
        match self {
            Source::Lidar => PROV_LIDAR,
            Source::Tof => PROV_TOF,
            Source::Learned => PROV_LEARNED,
        }
    }
}

/// Window geometry for per-frame grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Meters per cell.
    pub resolution: f64,
    /// Cells.
    pub width: usize,
    pub height: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        // 6 m x 6 m local window
        GridConfig {
            resolution: 0.05,
            width: 120,
            height: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// World coordinates of the corner of cell (0, 0).
    pub origin_x: f64,
    pub origin_y: f64,
    /// Robot position the window was centered on.
    pub robot_x: f64,
    pub robot_y: f64,
    state: Vec<CellState>,
    provenance: Vec<u8>,
    class: Vec<Option<SemClass>>,
}

impl OccupancyGrid {
    /// Window centered on the robot, origin snapped to the cell size.
    pub fn centered(cfg: &GridConfig, pose: &Pose2) -> Self {
        let snap = |x: f64| (x / cfg.resolution).floor() * cfg.resolution;
        let origin_x = snap(pose.x) - (cfg.width as f64 / 2.0) * cfg.resolution;
        let origin_y = snap(pose.y) - (cfg.height as f64 / 2.0) * cfg.resolution;
        let n = cfg.width * cfg.height;
        OccupancyGrid {
            resolution: cfg.resolution,
            width: cfg.width,
            height: cfg.height,
            origin_x,
            origin_y,
            robot_x: pose.x,
            robot_y: pose.y,
            state: vec![CellState::Free; n],
            provenance: vec![0; n],
            class: vec![None; n],
        }
    }

    #[inline]
    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let ix = ((x - self.origin_x) / self.resolution).floor();
        let iy = ((y - self.origin_y) / self.resolution).floor();
        if ix >= 0.0 && iy >= 0.0 && (ix as usize) < self.width && (iy as usize) < self.height {
            Some((ix as usize, iy as usize))
        } else {
            None
        }
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_x + (ix as f64 + 0.5) * self.resolution,
            self.origin_y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn state_at(&self, ix: usize, iy: usize) -> CellState {
        self.state[self.idx(ix, iy)]
    }

    pub fn provenance_at(&self, ix: usize, iy: usize) -> u8 {
        self.provenance[self.idx(ix, iy)]
    }

    pub fn class_at(&self, ix: usize, iy: usize) -> Option<SemClass> {
        self.class[self.idx(ix, iy)]
    }

    pub fn same_geometry(&self, other: &OccupancyGrid) -> bool {
        self.resolution == other.resolution
            && self.width == other.width
            && self.height == other.height
            && self.origin_x == other.origin_x
            && self.origin_y == other.origin_y
    }

    pub fn mark_obstacle(&mut self, ix: usize, iy: usize, source: Source) {
        let i = self.idx(ix, iy);
        self.state[i] = CellState::Obstacle;
        self.provenance[i] |= source.bit();
    }

    pub fn set_class(&mut self, ix: usize, iy: usize, class: SemClass) {
        let i = self.idx(ix, iy);
        match self.class[i] {
            Some(existing) if existing.priority() >= class.priority() => {}
            _ => self.class[i] = Some(class),
        }
    }

    pub fn obstacle_count(&self) -> usize {
        self.state.iter().filter(|s| **s == CellState::Obstacle).count()
    }

    pub fn inflated_count(&self) -> usize {
        self.state.iter().filter(|s| **s == CellState::Inflated).count()
    }

    /// Cells that are OBSTACLE or INFLATED.
    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |iy| {
            (0..self.width).filter_map(move |ix| {
                if self.state_at(ix, iy) != CellState::Free {
                    Some((ix, iy))
                } else {
                    None
                }
            })
        })
    }

    pub fn obstacle_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |iy| {
            (0..self.width).filter_map(move |ix| {
                if self.state_at(ix, iy) == CellState::Obstacle {
                    Some((ix, iy))
                } else {
                    None
                }
            })
        })
    }

    /// Text dump: header `W H RES OX OY`, then one character per cell
    /// (`.` free, `#` obstacle, `+` inflated), row 0 first.
    pub fn dump_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {}\n",
            self.width, self.height, self.resolution, self.origin_x, self.origin_y
        );
        for iy in 0..self.height {
            for ix in 0..self.width {
                out.push(match self.state_at(ix, iy) {
                    CellState::Free => '.',
                    CellState::Obstacle => '#',
                    CellState::Inflated => '+',
                });
            }
            out.push('\n');
        }
        out
    }

    /// Parallel provenance dump: same header, one hex digit per cell
    /// (bit0 LIDAR, bit1 TOF, bit2 LEARNED, bit3 INFLATION).
    pub fn dump_provenance(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {}\n",
            self.width, self.height, self.resolution, self.origin_x, self.origin_y
        );
        for iy in 0..self.height {
            for ix in 0..self.width {
                out.push(char::from_digit(self.provenance_at(ix, iy) as u32, 16).unwrap());
            }
            out.push('\n');
        }
        out
    }
}

/// Mark every point's (x, y) cell as OBSTACLE with the given source. The
/// cloud is in the base frame; `pose` places it in the world-aligned grid.
/// Points outside the window are ignored.
pub fn mark_from_pointcloud(
    grid: &mut OccupancyGrid,
    cloud: &crate::geometry::PointCloud,
    pose: &Pose2,
    source: Source,
) {
    let world_from_base = pose_transform(pose);
    for p in &cloud.points {
        let w = world_from_base.apply(p);
        if let Some((ix, iy)) = grid.world_to_cell(w.x, w.y) {
            grid.mark_obstacle(ix, iy, source);
        }
    }
}

/// Cells crossed by the segment from (x0, y0) to (x1, y1), via grid-line
/// stepping. Includes the start and end cells when inside the window.
fn traverse_cells(grid: &OccupancyGrid, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<(usize, usize)> {
    let res = grid.resolution;
    let mut cells = Vec::new();
    let dx = x1 - x0;
    let dy = y1 - y0;
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        if let Some(c) = grid.world_to_cell(x0, y0) {
            cells.push(c);
        }
        return cells;
    }
    // continuous cell coordinates
    let mut cx = ((x0 - grid.origin_x) / res).floor() as i64;
    let mut cy = ((y0 - grid.origin_y) / res).floor() as i64;
    let end_cx = ((x1 - grid.origin_x) / res).floor() as i64;
    let end_cy = ((y1 - grid.origin_y) / res).floor() as i64;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let next_boundary = |c: i64, step: i64| -> f64 {
        if step > 0 {
            (c + 1) as f64
        } else {
            c as f64
        }
    };
    let fx = (x0 - grid.origin_x) / res;
    let fy = (y0 - grid.origin_y) / res;
    let inv_dx = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
    let inv_dy = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
    let mut t_max_x = if dx != 0.0 {
        (next_boundary(cx, step_x) - fx).abs() * res / dx.abs() * len
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        (next_boundary(cy, step_y) - fy).abs() * res / dy.abs() * len
    } else {
        f64::INFINITY
    };
    let t_delta_x = inv_dx * len;
    let t_delta_y = inv_dy * len;
    let max_steps = 4 * (grid.width + grid.height) + 4;
    for _ in 0..max_steps {
        if cx >= 0 && cy >= 0 && (cx as usize) < grid.width && (cy as usize) < grid.height {
            cells.push((cx as usize, cy as usize));
        }
        if cx == end_cx && cy == end_cy {
            break;
        }
        let t = if t_max_x <= t_max_y {
            let t = t_max_x;
            t_max_x += t_delta_x;
            cx += step_x;
            t
        } else {
            let t = t_max_y;
            t_max_y += t_delta_y;
            cy += step_y;
            t
        };
        if t > len {
            break;
        }
    }
    cells
}

/// Mark each finite return's endpoint cell as OBSTACLE with LIDAR provenance
/// and clear FREE along the beam before the endpoint. Clearing never touches
/// cells marked by depth sources (TOF or LEARNED); only finite returns clear.
pub fn mark_from_lidar(grid: &mut OccupancyGrid, scan: &LidarScan, pose: &Pose2) {
    let mut endpoints: Vec<(usize, usize)> = Vec::new();
    let mut passthrough: Vec<(usize, usize)> = Vec::new();
    for (angle, range) in scan.returns() {
        let a = pose.yaw + angle;
        let ex = pose.x + range * a.cos();
        let ey = pose.y + range * a.sin();
        let end_cell = grid.world_to_cell(ex, ey);
        for cell in traverse_cells(grid, pose.x, pose.y, ex, ey) {
            if Some(cell) == end_cell {
                continue;
            }
            passthrough.push(cell);
        }
        if let Some(c) = end_cell {
            endpoints.push(c);
        }
    }
    // clear first, then mark, so beam order cannot matter
    for (ix, iy) in passthrough {
        let i = iy * grid.width + ix;
        if grid.state[i] == CellState::Obstacle && grid.provenance[i] & (PROV_TOF | PROV_LEARNED) == 0
        {
            grid.state[i] = CellState::Free;
            grid.provenance[i] = 0;
        }
    }
    for (ix, iy) in endpoints {
        grid.mark_obstacle(ix, iy, Source::Lidar);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InflationStrategy {
    Fixed,
    CorridorWidth,
    ClassAware,
    Dynamic,
}

/// Per-class inflation radii, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRadii {
    pub person: f64,
    pub glass: f64,
    pub furniture: f64,
    pub wall: f64,
    pub floor: f64,
    pub other: f64,
}

impl Default for ClassRadii {
    fn default() -> Self {
        ClassRadii {
            person: 0.25,
            glass: 0.20,
            furniture: 0.15,
            wall: 0.09,
            floor: 0.09,
            other: 0.09,
        }
    }
}

impl ClassRadii {
    pub fn for_class(&self, class: SemClass) -> f64 {
        match class {
            SemClass::Person => self.person,
            SemClass::Glass => self.glass,
            SemClass::Furniture => self.furniture,
            SemClass::Wall => self.wall,
            SemClass::Floor => self.floor,
            SemClass::Other => self.other,
        }
    }

    pub fn uniform(r: f64) -> Self {
        ClassRadii {
            person: r,
            glass: r,
            furniture: r,
            wall: r,
            floor: r,
            other: r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InflationConfig {
    pub strategy: InflationStrategy,
    pub fixed_radius: f64,
    pub class_radii: ClassRadii,
    pub robot_width: f64,
    /// Clamp for the corridor-width radius.
    pub r_min: f64,
    pub r_max: f64,
    /// Scenario-declared corridor axis used by the width measurement.
    pub corridor_axis_yaw: f64,
}

impl Default for InflationConfig {
    fn default() -> Self {
        InflationConfig {
            strategy: InflationStrategy::Fixed,
            fixed_radius: 0.09,
            class_radii: ClassRadii::default(),
            robot_width: 0.35,
            r_min: 0.09,
            r_max: 0.18,
            corridor_axis_yaw: 0.0,
        }
    }
}

impl InflationConfig {
    pub fn validate(&self) -> Result<(), CostmapError> {
        let radii = [
            self.fixed_radius,
            self.class_radii.person,
            self.class_radii.glass,
            self.class_radii.furniture,
            self.class_radii.wall,
            self.class_radii.floor,
            self.class_radii.other,
            self.r_min,
            self.r_max,
            self.robot_width,
        ];
        if radii.iter().any(|r| *r < 0.0) {
            return Err(CostmapError::InvalidConfig("negative radius".into()));
        }
        if matches!(self.strategy, InflationStrategy::ClassAware | InflationStrategy::Dynamic) {
            let c = &self.class_radii;
            if !(c.person >= c.glass && c.glass >= c.furniture && c.furniture >= c.wall) {
                return Err(CostmapError::InvalidConfig(
                    "class radii must be ordered person >= glass >= furniture >= wall".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Free-space extent through the robot cell perpendicular to the corridor
/// axis, measured by marching over the obstacle layer.
fn measured_free_width(grid: &OccupancyGrid, axis_yaw: f64) -> f64 {
    let perp = axis_yaw + std::f64::consts::FRAC_PI_2;
    let (dx, dy) = (perp.cos(), perp.sin());
    let step = grid.resolution / 2.0;
    let reach = (grid.width.max(grid.height) as f64) * grid.resolution;
    let march = |sign: f64| -> f64 {
        let mut dist = 0.0;
        loop {
            dist += step;
            if dist > reach {
                return reach;
            }
            let x = grid.robot_x + sign * dist * dx;
            let y = grid.robot_y + sign * dist * dy;
            match grid.world_to_cell(x, y) {
                None => return dist,
                Some((ix, iy)) => {
                    if grid.state_at(ix, iy) == CellState::Obstacle {
                        return dist;
                    }
                }
            }
        }
    };
    march(1.0) + march(-1.0)
}

/// Inflate the obstacle layer. FREE cells within the per-obstacle radius
/// (Euclidean, cell center to cell center) become INFLATED; OBSTACLE cells
/// are never overwritten, so inflation is idempotent.
pub fn inflate(grid: &mut OccupancyGrid, cfg: &InflationConfig) -> Result<(), CostmapError> {
    cfg.validate()?;
    let obstacles: Vec<(usize, usize)> = grid.obstacle_cells().collect();
    if matches!(cfg.strategy, InflationStrategy::ClassAware)
        && !obstacles.is_empty()
        && obstacles.iter().all(|(ix, iy)| grid.class_at(*ix, *iy).is_none())
    {
        return Err(CostmapError::MissingClassData);
    }
    let corridor_radius = if cfg.strategy == InflationStrategy::CorridorWidth {
        let w = measured_free_width(grid, cfg.corridor_axis_yaw);
        ((w - cfg.robot_width) / 2.0).clamp(cfg.r_min, cfg.r_max)
    } else {
        0.0
    };
    for (ix, iy) in obstacles {
        let r = match cfg.strategy {
            InflationStrategy::Fixed => cfg.fixed_radius,
            InflationStrategy::CorridorWidth => corridor_radius,
            InflationStrategy::ClassAware => cfg
                .class_radii
                .for_class(grid.class_at(ix, iy).unwrap_or(SemClass::Wall)),
            InflationStrategy::Dynamic => cfg
                .class_radii
                .for_class(grid.class_at(ix, iy).unwrap_or(SemClass::Person)),
        };
        if r <= 0.0 {
            continue;
        }
        let span = (r / grid.resolution).ceil() as isize;
        let (cx, cy) = grid.cell_center(ix, iy);
        for oy in -span..=span {
            for ox in -span..=span {
                let nx = ix as isize + ox;
                let ny = iy as isize + oy;
                if nx < 0 || ny < 0 || nx as usize >= grid.width || ny as usize >= grid.height {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let (px, py) = grid.cell_center(nx, ny);
                if ((px - cx).powi(2) + (py - cy).powi(2)).sqrt() <= r {
                    let i = ny * grid.width + nx;
                    if grid.state[i] == CellState::Free {
                        grid.state[i] = CellState::Inflated;
                    }
                    if grid.state[i] == CellState::Inflated {
                        grid.provenance[i] |= PROV_INFLATION;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Assign each valid depth pixel's class to its grid cell, ties broken by
/// class priority (person > glass > furniture > wall > floor > other).
pub fn project_classes(
    grid: &mut OccupancyGrid,
    labels: &LabelMap,
    depth: &DepthFrame,
    cam: &CameraModel,
    pose: &Pose2,
) -> Result<(), CostmapError> {
    if labels.width != depth.width || labels.height != depth.height {
        return Err(CostmapError::GeometryMismatch(
            "label map and depth frame differ in size".into(),
        ));
    }
    let cloud = back_project(depth, cam)?;
    let base = transform_points(&cloud, &cam.extrinsic);
    let world_from_base = pose_transform(pose);
    // back_project visits pixels row-major over valid pixels; rebuild the
    // pixel walk to pair classes with points
    let mut k = 0;
    for v in 0..depth.height {
        for u in 0..depth.width {
            if depth.is_valid(u, v) {
                let w = world_from_base.apply(&base.points[k]);
                k += 1;
                if let Some((ix, iy)) = grid.world_to_cell(w.x, w.y) {
                    grid.set_class(ix, iy, labels.at(u, v));
                }
            }
        }
    }
    Ok(())
}

/// Which sensor sources feed the costmap for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourceSet {
    pub lidar: bool,
    /// Hardware (ToF) depth.
    pub hardware: bool,
    /// Learned monocular depth (requires a fused frame).
    pub learned: bool,
}

/// Everything one frame contributes to costmap construction. The fused frame
/// is required whenever the learned source is enabled.
#[derive(Debug)]
pub struct FrameBundle<'a> {
    pub scan: &'a LidarScan,
    pub tof: &'a DepthFrame,
    pub fused: Option<&'a FusedFrame>,
    pub labels: &'a LabelMap,
    pub pose: Pose2,
}

/// Height band and grid window used when building per-frame costmaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostmapParams {
    pub grid: GridConfig,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for CostmapParams {
    fn default() -> Self {
        CostmapParams {
            grid: GridConfig::default(),
            h_min: 0.05,
            h_max: 2.0,
        }
    }
}

fn mark_depth_pixels<F: Fn(usize) -> bool>(
    grid: &mut OccupancyGrid,
    frame: &DepthFrame,
    keep: F,
    cam: &CameraModel,
    pose: &Pose2,
    params: &CostmapParams,
    source: Source,
) -> Result<(), CostmapError> {
    let mut sub = frame.clone();
    for i in 0..sub.depth.len() {
        if !keep(i) {
            sub.depth[i] = 0.0;
        }
    }
    let cloud = back_project(&sub, cam)?;
    let base = transform_points(&cloud, &cam.extrinsic);
    let band = height_band_filter(&base, params.h_min, params.h_max)?;
    mark_from_pointcloud(grid, &band, pose, source);
    Ok(())
}

/// Compose LiDAR marking, depth-source marking, class projection, and
/// inflation into one per-frame costmap.
///
/// Source semantics: S marks ToF pixels passing the fusion gate with TOF
/// provenance. D marks learned-filled pixels (fusion mask LEARNED) with
/// LEARNED provenance; when S is disabled, D marks the full fused frame, with
/// provenance still split by the fusion mask so false-positive attribution
/// can trace learned fill back to ToF-invalid pixels.
pub fn build_frame_costmap(
    sources: SourceSet,
    inflation: &InflationConfig,
    bundle: &FrameBundle,
    cam: &CameraModel,
    fusion_cfg: &FusionConfig,
    params: &CostmapParams,
) -> Result<OccupancyGrid, CostmapError> {
    let mut grid = OccupancyGrid::centered(&params.grid, &bundle.pose);
    if sources.lidar {
        mark_from_lidar(&mut grid, bundle.scan, &bundle.pose);
    }
    if sources.hardware {
        let tof = bundle.tof;
        mark_depth_pixels(
            &mut grid,
            tof,
            |i| fusion_cfg.tof_gate(tof.depth[i], tof.confidence[i]),
            cam,
            &bundle.pose,
            params,
            Source::Tof,
        )?;
    }
    if sources.learned {
        let fused = bundle.fused.ok_or_else(|| {
            CostmapError::InvalidConfig("learned source enabled without a fused frame".into())
        })?;
        mark_depth_pixels(
            &mut grid,
            &fused.depth,
            |i| fused.mask[i] == FusionSource::Learned,
            cam,
            &bundle.pose,
            params,
            Source::Learned,
        )?;
        if !sources.hardware {
            mark_depth_pixels(
                &mut grid,
                &fused.depth,
                |i| fused.mask[i] == FusionSource::Tof,
                cam,
                &bundle.pose,
                params,
                Source::Tof,
            )?;
        }
    }
    if matches!(
        inflation.strategy,
        InflationStrategy::ClassAware | InflationStrategy::Dynamic
    ) {
        let depth_for_classes = bundle.fused.map(|f| &f.depth).unwrap_or(bundle.tof);
        project_classes(&mut grid, bundle.labels, depth_for_classes, cam, &bundle.pose)?;
    }
    inflate(&mut grid, inflation)?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CloudFrame, PointCloud};
    use nalgebra::Point3;

    fn small_grid() -> OccupancyGrid {
        OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: 40,
                height: 40,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        )
    }

    #[test]
    fn empty_cloud_leaves_grid_unchanged() {
        let mut grid = small_grid();
        let cloud = PointCloud {
            points: vec![],
            frame: CloudFrame::Base,
        };
        mark_from_pointcloud(&mut grid, &cloud, &Pose2::new(0.0, 0.0, 0.0), Source::Tof);
        assert_eq!(grid.obstacle_count(), 0);
    }

    #[test]
    fn point_at_cell_center_marks_exactly_that_cell() {
        let mut grid = small_grid();
        let (cx, cy) = grid.cell_center(25, 20);
        let cloud = PointCloud {
            points: vec![Point3::new(cx, cy, 0.5)],
            frame: CloudFrame::Base,
        };
        mark_from_pointcloud(&mut grid, &cloud, &Pose2::new(0.0, 0.0, 0.0), Source::Tof);
        assert_eq!(grid.obstacle_count(), 1);
        assert_eq!(grid.state_at(25, 20), CellState::Obstacle);
        assert_eq!(grid.provenance_at(25, 20), PROV_TOF);
    }

    #[test]
    fn wall_line_matches_brute_force_rasterization() {
        let mut grid = small_grid();
        let points: Vec<Point3<f64>> = (0..1000)
            .map(|i| Point3::new(-0.9 + 1.8 * i as f64 / 999.0, 0.7, 0.5))
            .collect();
        let cloud = PointCloud {
            points: points.clone(),
            frame: CloudFrame::Base,
        };
        let pose = Pose2::new(0.0, 0.0, 0.0);
        mark_from_pointcloud(&mut grid, &cloud, &pose, Source::Learned);
        let mut expected = std::collections::HashSet::new();
        for p in &points {
            if let Some(c) = grid.world_to_cell(p.x, p.y) {
                expected.insert(c);
            }
        }
        assert_eq!(grid.obstacle_count(), expected.len());
        for (ix, iy) in expected {
            assert_eq!(grid.state_at(ix, iy), CellState::Obstacle);
        }
    }

    #[test]
    fn all_nan_scan_marks_nothing() {
        let mut grid = small_grid();
        let scan = LidarScan {
            angle_min: 0.0,
            angle_increment: 0.1,
            ranges: vec![f64::NAN; 10],
            scan_height: 0.18,
            range_max: 8.0,
        };
        mark_from_lidar(&mut grid, &scan, &Pose2::new(0.0, 0.0, 0.0));
        assert_eq!(grid.obstacle_count(), 0);
    }

    #[test]
    fn single_return_lands_twenty_cells_ahead() {
        let mut grid = OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: 60,
                height: 60,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        );
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let scan = LidarScan {
            angle_min: 0.0,
            angle_increment: 0.1,
            ranges: vec![1.0],
            scan_height: 0.18,
            range_max: 8.0,
        };
        mark_from_lidar(&mut grid, &scan, &pose);
        assert_eq!(grid.obstacle_count(), 1);
        let robot_cell = grid.world_to_cell(0.0, 0.0).unwrap();
        let hit_cell = grid.world_to_cell(1.0, 0.0).unwrap();
        assert_eq!(hit_cell.0, robot_cell.0 + 20);
        assert_eq!(grid.state_at(hit_cell.0, hit_cell.1), CellState::Obstacle);
    }

    #[test]
    fn lidar_endpoints_match_brute_force_rasterization() {
        let mut grid = small_grid();
        let pose = Pose2::new(0.0, 0.0, 0.0);
        // wall 0.8 m ahead across 180 degrees
        let n = 181;
        let ranges: Vec<f64> = (0..n)
            .map(|i| {
                let a = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / (n - 1) as f64;
                if a.cos() > 0.05 {
                    0.8 / a.cos()
                } else {
                    f64::NAN
                }
            })
            .collect();
        let scan = LidarScan {
            angle_min: -std::f64::consts::FRAC_PI_2,
            angle_increment: std::f64::consts::PI / (n - 1) as f64,
            ranges: ranges.clone(),
            scan_height: 0.18,
            range_max: 8.0,
        };
        mark_from_lidar(&mut grid, &scan, &pose);
        let mut expected = std::collections::HashSet::new();
        for (i, r) in ranges.iter().enumerate() {
            if r.is_finite() && *r <= 8.0 {
                let a = scan.angle_min + scan.angle_increment * i as f64;
                if let Some(c) = grid.world_to_cell(r * a.cos(), r * a.sin()) {
                    expected.insert(c);
                }
            }
        }
        let actual: std::collections::HashSet<_> = grid.obstacle_cells().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn lidar_clearing_spares_depth_sourced_cells() {
        let mut grid = small_grid();
        let pose = Pose2::new(0.0, 0.0, 0.0);
        // depth-sourced obstacle halfway along the beam
        let cloud = PointCloud {
            points: vec![Point3::new(0.5, 0.0, 0.5)],
            frame: CloudFrame::Base,
        };
        mark_from_pointcloud(&mut grid, &cloud, &pose, Source::Learned);
        // lidar-sourced obstacle on the same path
        let (lx, ly) = grid.world_to_cell(0.3, 0.0).unwrap();
        grid.mark_obstacle(lx, ly, Source::Lidar);
        let scan = LidarScan {
            angle_min: 0.0,
            angle_increment: 0.1,
            ranges: vec![0.9],
            scan_height: 0.18,
            range_max: 8.0,
        };
        mark_from_lidar(&mut grid, &scan, &pose);
        let depth_cell = grid.world_to_cell(0.5, 0.0).unwrap();
        assert_eq!(grid.state_at(depth_cell.0, depth_cell.1), CellState::Obstacle);
        // the lidar-only cell on the path was cleared
        assert_eq!(grid.state_at(lx, ly), CellState::Free);
        let end = grid.world_to_cell(0.9, 0.0).unwrap();
        assert_eq!(grid.state_at(end.0, end.1), CellState::Obstacle);
    }

    #[test]
    fn zero_radius_inflation_adds_nothing() {
        let mut grid = small_grid();
        grid.mark_obstacle(20, 20, Source::Lidar);
        let cfg = InflationConfig {
            fixed_radius: 0.0,
            ..InflationConfig::default()
        };
        inflate(&mut grid, &cfg).unwrap();
        assert_eq!(grid.inflated_count(), 0);
    }

    #[test]
    fn fixed_inflation_matches_brute_force_disc() {
        let mut grid = small_grid();
        grid.mark_obstacle(20, 20, Source::Lidar);
        let cfg = InflationConfig::default(); // fixed 0.09 m
        inflate(&mut grid, &cfg).unwrap();
        let (cx, cy) = grid.cell_center(20, 20);
        for iy in 0..grid.height {
            for ix in 0..grid.width {
                let (px, py) = grid.cell_center(ix, iy);
                let d = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
                let expect = if (ix, iy) == (20, 20) {
                    CellState::Obstacle
                } else if d <= 0.09 {
                    CellState::Inflated
                } else {
                    CellState::Free
                };
                assert_eq!(grid.state_at(ix, iy), expect, "cell ({ix}, {iy})");
            }
        }
    }

    #[test]
    fn inflation_is_idempotent_and_preserves_obstacles() {
        let mut grid = small_grid();
        grid.mark_obstacle(10, 10, Source::Tof);
        grid.mark_obstacle(30, 12, Source::Lidar);
        let cfg = InflationConfig::default();
        inflate(&mut grid, &cfg).unwrap();
        let once = grid.clone();
        inflate(&mut grid, &cfg).unwrap();
        assert_eq!(grid, once);
        assert_eq!(grid.obstacle_count(), 2);
    }

    #[test]
    fn corridor_width_radius_clamps_to_r_max_in_a_wide_corridor() {
        // 2.0 m corridor, robot 0.35 m: (2.0 - 0.35) / 2 clamps at r_max
        let mut grid = small_grid();
        for ix in 0..grid.width {
            for y in [1.0 - 0.025, -1.0 + 0.025] {
                let x = grid.origin_x + (ix as f64 + 0.5) * grid.resolution;
                if let Some((cx, cy)) = grid.world_to_cell(x, y) {
                    grid.mark_obstacle(cx, cy, Source::Lidar);
                }
            }
        }
        let cfg = InflationConfig {
            strategy: InflationStrategy::CorridorWidth,
            ..InflationConfig::default()
        };
        inflate(&mut grid, &cfg).unwrap();
        // r_max = 0.18: inflated band extends 3 cells past each wall line
        let wall = grid.world_to_cell(0.0, 1.0 - 0.025).unwrap();
        assert_eq!(grid.state_at(wall.0, wall.1 - 3), CellState::Inflated);
        assert_eq!(grid.state_at(wall.0, wall.1 - 4), CellState::Free);
    }

    #[test]
    fn class_aware_with_uniform_radii_equals_fixed() {
        let build = || {
            let mut grid = small_grid();
            grid.mark_obstacle(15, 22, Source::Tof);
            grid.mark_obstacle(28, 9, Source::Lidar);
            grid.set_class(15, 22, SemClass::Wall);
            grid.set_class(28, 9, SemClass::Person);
            grid
        };
        let mut class_grid = build();
        inflate(
            &mut class_grid,
            &InflationConfig {
                strategy: InflationStrategy::ClassAware,
                class_radii: ClassRadii::uniform(0.12),
                ..InflationConfig::default()
            },
        )
        .unwrap();
        let mut fixed_grid = build();
        inflate(
            &mut fixed_grid,
            &InflationConfig {
                fixed_radius: 0.12,
                ..InflationConfig::default()
            },
        )
        .unwrap();
        for iy in 0..class_grid.height {
            for ix in 0..class_grid.width {
                assert_eq!(class_grid.state_at(ix, iy), fixed_grid.state_at(ix, iy));
            }
        }
    }

    #[test]
    fn class_aware_without_class_data_is_an_error() {
        let mut grid = small_grid();
        grid.mark_obstacle(20, 20, Source::Lidar);
        let err = inflate(
            &mut grid,
            &InflationConfig {
                strategy: InflationStrategy::ClassAware,
                ..InflationConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, CostmapError::MissingClassData));
    }

    #[test]
    fn class_priority_person_beats_wall() {
        let mut grid = small_grid();
        for _ in 0..10 {
            grid.set_class(5, 5, SemClass::Wall);
        }
        grid.set_class(5, 5, SemClass::Person);
        grid.set_class(5, 5, SemClass::Wall);
        assert_eq!(grid.class_at(5, 5), Some(SemClass::Person));
    }

    #[test]
    fn grid_dump_round_trips_header_and_states() {
        let mut grid = OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: 4,
                height: 3,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        );
        grid.mark_obstacle(1, 0, Source::Lidar);
        grid.mark_obstacle(2, 2, Source::Learned);
        inflate(
            &mut grid,
            &InflationConfig {
                fixed_radius: 0.051,
                ..InflationConfig::default()
            },
        )
        .unwrap();
        let text = grid.dump_text();
        let mut lines = text.lines();
        let header: Vec<f64> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(header[0], 4.0);
        assert_eq!(header[1], 3.0);
        assert_eq!(header[2], 0.05);
        assert!((header[3] + 0.1).abs() < 1e-12);
        assert!((header[4] + 0.075).abs() < 1e-12);
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].as_bytes()[1], b'#');
        assert_eq!(rows[2].as_bytes()[2], b'#');
        let prov = grid.dump_provenance();
        let prow: Vec<&str> = prov.lines().skip(1).collect();
        assert_eq!(&prow[0][1..2], "1");
        assert_eq!(&prow[2][2..3], "4");
        // inflated neighbor carries the inflation bit
        assert_eq!(&prow[0][0..1], "8");
    }
}
