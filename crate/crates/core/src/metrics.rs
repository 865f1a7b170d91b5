//! Costmap and depth evaluation: IoU, detection rate, false-positive
//! decomposition, clearance, temporal stability, and banded depth error.

use thiserror::Error;

use crate::costmap::{CellState, OccupancyGrid, PROV_INFLATION, PROV_LEARNED};
use crate::frame::DepthFrame;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("grids have mismatched geometry")]
    GeometryMismatch,
    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { need: usize, got: usize },
    #[error("no pixels fall inside the evaluation band")]
    EmptyEvaluationSet,
    #[error("frames have mismatched dimensions")]
    FrameMismatch,
}

/// Planar obstacle footprint for ground-truth comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    Rect { min: [f64; 2], max: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl Footprint {
    /// Euclidean distance from (x, y) to the footprint; 0 inside.
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        match *self {
            Footprint::Rect { min, max } => {
                let dx = (min[0] - x).max(0.0).max(x - max[0]);
                let dy = (min[1] - y).max(0.0).max(y - max[1]);
                (dx * dx + dy * dy).sqrt()
            }
            Footprint::Circle { center, radius } => {
                let d = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
                (d - radius).max(0.0)
            }
        }
    }
}

/// True obstacle and structure footprints for a frame.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// Discrete obstacles that detection rate is scored against.
    pub obstacles: Vec<Footprint>,
    /// Walls and other static structure; counts as real surface for
    /// false-positive attribution but not for detection rate.
    pub structure: Vec<Footprint>,
}

impl GroundTruth {
    fn near_any(&self, x: f64, y: f64, tol: f64) -> bool {
        self.obstacles
            .iter()
            .chain(self.structure.iter())
            .any(|f| f.distance_to(x, y) <= tol)
    }
}

/// Intersection over union of the occupied (OBSTACLE or INFLATED) cell sets.
/// Two empty grids agree perfectly and score 1.
pub fn iou(test: &OccupancyGrid, reference: &OccupancyGrid) -> Result<f64, MetricsError> {
    if !test.same_geometry(reference) {
        return Err(MetricsError::GeometryMismatch);
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for iy in 0..test.height {
        for ix in 0..test.width {
            let a = test.state_at(ix, iy) != CellState::Free;
            let b = reference.state_at(ix, iy) != CellState::Free;
            if a && b {
                inter += 1;
            }
            if a || b {
                union += 1;
            }
        }
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

/// Fraction of ground-truth obstacles with at least one occupied cell whose
/// center lies within `tolerance` of the footprint. None when there are no
/// obstacles to detect.
pub fn detection_rate(
    grid: &OccupancyGrid,
    obstacles: &[Footprint],
    tolerance: f64,
) -> Option<f64> {
    if obstacles.is_empty() {
        return None;
    }
    let occupied: Vec<(f64, f64)> = grid
        .occupied_cells()
        .map(|(ix, iy)| grid.cell_center(ix, iy))
        .collect();
    let detected = obstacles
        .iter()
        .filter(|f| occupied.iter().any(|(x, y)| f.distance_to(*x, *y) <= tolerance))
        .count();
    Some(detected as f64 / obstacles.len() as f64)
}

/// False-positive rate and its attribution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FprReport {
    /// False-positive cells over reference free cells.
    pub fpr: f64,
    pub false_positive_cells: usize,
    /// Fractions of the false-positive cells; sum to 1 when any exist.
    pub inflation_artifact: f64,
    pub sensor_invalid_fill: f64,
    pub hallucination: f64,
}

/// Compare a test grid against a reference and attribute each false-positive
/// cell: inflation-only provenance is an inflation artifact; learned-depth
/// provenance near a real surface is invalid-pixel fill; everything else is a
/// hallucination. `surface_tol` is the distance within which a cell counts as
/// touching a real surface.
pub fn fpr_decompose(
    test: &OccupancyGrid,
    reference: &OccupancyGrid,
    gt: &GroundTruth,
    surface_tol: f64,
) -> Result<FprReport, MetricsError> {
    if !test.same_geometry(reference) {
        return Err(MetricsError::GeometryMismatch);
    }
    let mut free_ref = 0usize;
    let mut fp = 0usize;
    let (mut inflation, mut fill, mut halluc) = (0usize, 0usize, 0usize);
    for iy in 0..test.height {
        for ix in 0..test.width {
            if reference.state_at(ix, iy) == CellState::Free {
                free_ref += 1;
            } else {
                continue;
            }
            if test.state_at(ix, iy) == CellState::Free {
                continue;
            }
            fp += 1;
            let prov = test.provenance_at(ix, iy);
            if prov & !PROV_INFLATION == 0 {
                inflation += 1;
            } else if prov & PROV_LEARNED != 0 {
                let (x, y) = test.cell_center(ix, iy);
                if gt.near_any(x, y, surface_tol) {
                    fill += 1;
                } else {
                    halluc += 1;
                }
            } else {
                halluc += 1;
            }
        }
    }
    let mut report = FprReport {
        fpr: if free_ref == 0 { 0.0 } else { fp as f64 / free_ref as f64 },
        false_positive_cells: fp,
        ..FprReport::default()
    };
    if fp > 0 {
        report.inflation_artifact = inflation as f64 / fp as f64;
        report.sensor_invalid_fill = fill as f64 / fp as f64;
        report.hallucination = halluc as f64 / fp as f64;
    }
    Ok(report)
}

/// Distance from the robot to the nearest occupied cell center; +inf on a
/// grid with no occupied cells.
pub fn clearance(grid: &OccupancyGrid) -> f64 {
    grid.occupied_cells()
        .map(|(ix, iy)| {
            let (x, y) = grid.cell_center(ix, iy);
            ((x - grid.robot_x).powi(2) + (y - grid.robot_y).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Mean over consecutive frame pairs of the OBSTACLE-cell symmetric
/// difference, normalized by total cell count. Needs at least two frames of
/// identical geometry.
pub fn occupancy_jitter(grids: &[OccupancyGrid]) -> Result<f64, MetricsError> {
    if grids.len() < 2 {
        return Err(MetricsError::TooFewFrames {
            need: 2,
            got: grids.len(),
        });
    }
    let total = (grids[0].width * grids[0].height) as f64;
    let mut sum = 0.0;
    for pair in grids.windows(2) {
        if !pair[0].same_geometry(&pair[1]) {
            return Err(MetricsError::GeometryMismatch);
        }
        let mut diff = 0usize;
        for iy in 0..pair[0].height {
            for ix in 0..pair[0].width {
                let a = pair[0].state_at(ix, iy) == CellState::Obstacle;
                let b = pair[1].state_at(ix, iy) == CellState::Obstacle;
                if a != b {
                    diff += 1;
                }
            }
        }
        sum += diff as f64 / total;
    }
    Ok(sum / (grids.len() - 1) as f64)
}

fn obstacle_centroid(grid: &OccupancyGrid) -> Option<(f64, f64)> {
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (ix, iy) in grid.obstacle_cells() {
        let (x, y) = grid.cell_center(ix, iy);
        sx += x;
        sy += y;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some((sx / n as f64, sy / n as f64))
    }
}

/// Mean distance of per-frame OBSTACLE centroids from their sequence mean,
/// meters. Frames with no obstacles are excluded; at least two usable frames
/// are required.
pub fn centroid_drift(grids: &[OccupancyGrid]) -> Result<f64, MetricsError> {
    let centroids: Vec<(f64, f64)> = grids.iter().filter_map(obstacle_centroid).collect();
    if centroids.len() < 2 {
        return Err(MetricsError::TooFewFrames {
            need: 2,
            got: centroids.len(),
        });
    }
    let n = centroids.len() as f64;
    let mx = centroids.iter().map(|c| c.0).sum::<f64>() / n;
    let my = centroids.iter().map(|c| c.1).sum::<f64>() / n;
    Ok(centroids
        .iter()
        .map(|(x, y)| ((x - mx).powi(2) + (y - my).powi(2)).sqrt())
        .sum::<f64>()
        / n)
}

/// Banded depth-error summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub abs_rel: f64,
    /// Fraction of pixels with max(pred/gt, gt/pred) < 1.25.
    pub delta1: f64,
    pub count: usize,
}

/// Error of `pred` against `gt` over pixels whose ground-truth depth lies in
/// [band_lo, band_hi]. Pixels with non-positive ground truth never qualify.
pub fn depth_metrics(
    pred: &DepthFrame,
    gt: &DepthFrame,
    band_lo: f64,
    band_hi: f64,
) -> Result<DepthMetrics, MetricsError> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(MetricsError::FrameMismatch);
    }
    let mut count = 0usize;
    let (mut se, mut ae, mut rel, mut hits) = (0.0, 0.0, 0.0, 0usize);
    for i in 0..gt.depth.len() {
        let g = gt.depth[i];
        if !(g.is_finite() && g > 0.0 && g >= band_lo && g <= band_hi) {
            continue;
        }
        let p = pred.depth[i];
        let e = p - g;
        se += e * e;
        ae += e.abs();
        rel += e.abs() / g;
        if p > 0.0 && (p / g).max(g / p) < 1.25 {
            hits += 1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(MetricsError::EmptyEvaluationSet);
    }
    let n = count as f64;
    Ok(DepthMetrics {
        rmse: (se / n).sqrt(),
        mae: ae / n,
        abs_rel: rel / n,
        delta1: hits as f64 / n,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmap::{GridConfig, Source};
    use crate::frame::Pose2;

    fn grid() -> OccupancyGrid {
        OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: 20,
                height: 20,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        )
    }

    #[test]
    fn iou_of_identical_grids_is_one_and_empty_grids_score_one() {
        let mut a = grid();
        a.mark_obstacle(3, 4, Source::Lidar);
        assert_eq!(iou(&a, &a.clone()).unwrap(), 1.0);
        assert_eq!(iou(&grid(), &grid()).unwrap(), 1.0);
    }

    #[test]
    fn iou_counts_partial_overlap() {
        let mut a = grid();
        let mut b = grid();
        // a: cells {1, 2}, b: cells {2, 3} -> intersection 1, union 3
        a.mark_obstacle(1, 0, Source::Lidar);
        a.mark_obstacle(2, 0, Source::Lidar);
        b.mark_obstacle(2, 0, Source::Lidar);
        b.mark_obstacle(3, 0, Source::Lidar);
        assert!((iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_rejects_geometry_mismatch() {
        let other = OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: 21,
                height: 20,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        );
        assert!(matches!(
            iou(&grid(), &other),
            Err(MetricsError::GeometryMismatch)
        ));
    }

    #[test]
    fn detection_rate_uses_tolerance_and_handles_empty_gt() {
        let mut g = grid();
        let (cx, cy) = g.cell_center(12, 10);
        g.mark_obstacle(12, 10, Source::Tof);
        let near = Footprint::Circle {
            center: [cx + 0.08, cy],
            radius: 0.0,
        };
        let far = Footprint::Circle {
            center: [cx + 1.0, cy],
            radius: 0.0,
        };
        assert_eq!(detection_rate(&g, &[near], 0.1), Some(1.0));
        assert_eq!(detection_rate(&g, &[near, far], 0.1), Some(0.5));
        assert_eq!(detection_rate(&g, &[], 0.1), None);
    }

    #[test]
    fn footprint_distance_is_zero_inside_and_euclidean_outside() {
        let r = Footprint::Rect {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        };
        assert_eq!(r.distance_to(0.5, 0.5), 0.0);
        assert!((r.distance_to(2.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((r.distance_to(2.0, 2.0) - std::f64::consts::SQRT_2).abs() < 1e-12);
        let c = Footprint::Circle {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        assert_eq!(c.distance_to(0.2, 0.0), 0.0);
        assert!((c.distance_to(1.5, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fpr_attribution_covers_all_three_buckets() {
        let reference = grid();
        let mut test = grid();
        // learned cell near a real surface -> invalid fill
        test.mark_obstacle(5, 5, Source::Learned);
        // learned cell far from any surface -> hallucination
        test.mark_obstacle(15, 15, Source::Learned);
        // inflation-only cell
        crate::costmap::inflate(
            &mut test,
            &crate::costmap::InflationConfig {
                // just over one cell pitch, so exactly the 4-neighbors inflate
                fixed_radius: 0.051,
                ..Default::default()
            },
        )
        .unwrap();
        let (sx, sy) = test.cell_center(5, 5);
        let gt = GroundTruth {
            obstacles: vec![],
            structure: vec![Footprint::Circle {
                center: [sx, sy],
                radius: 0.02,
            }],
        };
        let rep = fpr_decompose(&test, &reference, &gt, 0.05).unwrap();
        // 2 obstacles + 4 inflated cells each = 10 false positives
        assert_eq!(rep.false_positive_cells, 10);
        assert!((rep.fpr - 10.0 / 400.0).abs() < 1e-12);
        assert!((rep.inflation_artifact - 0.8).abs() < 1e-12);
        assert!((rep.sensor_invalid_fill - 0.1).abs() < 1e-12);
        assert!((rep.hallucination - 0.1).abs() < 1e-12);
        assert!(
            (rep.inflation_artifact + rep.sensor_invalid_fill + rep.hallucination - 1.0).abs()
                < 1e-9
        );
    }

    #[test]
    fn fpr_is_zero_when_grids_match() {
        let mut a = grid();
        a.mark_obstacle(2, 2, Source::Lidar);
        let rep = fpr_decompose(&a, &a.clone(), &GroundTruth::default(), 0.05).unwrap();
        assert_eq!(rep.fpr, 0.0);
        assert_eq!(rep.false_positive_cells, 0);
    }

    #[test]
    fn clearance_on_empty_grid_is_infinite() {
        assert_eq!(clearance(&grid()), f64::INFINITY);
        let mut g = grid();
        g.mark_obstacle(10, 14, Source::Lidar);
        let (x, y) = g.cell_center(10, 14);
        let expect = (x * x + y * y).sqrt();
        assert!((clearance(&g) - expect).abs() < 1e-12);
    }

    #[test]
    fn jitter_counts_symmetric_difference_of_obstacle_cells() {
        let mut a = grid();
        let mut b = grid();
        a.mark_obstacle(1, 1, Source::Lidar);
        a.mark_obstacle(2, 2, Source::Lidar);
        b.mark_obstacle(2, 2, Source::Lidar);
        b.mark_obstacle(3, 3, Source::Lidar);
        // symmetric difference {(1,1), (3,3)} over 400 cells
        let j = occupancy_jitter(&[a.clone(), b.clone()]).unwrap();
        assert!((j - 2.0 / 400.0).abs() < 1e-12);
        // identical frames add zero
        let j3 = occupancy_jitter(&[a.clone(), b.clone(), b.clone()]).unwrap();
        assert!((j3 - 1.0 / 400.0).abs() < 1e-12);
        assert!(matches!(
            occupancy_jitter(&[a]),
            Err(MetricsError::TooFewFrames { .. })
        ));
    }

    #[test]
    fn centroid_drift_is_zero_for_a_static_sequence() {
        let mut a = grid();
        a.mark_obstacle(5, 5, Source::Lidar);
        a.mark_obstacle(7, 5, Source::Lidar);
        let d = centroid_drift(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn centroid_drift_skips_empty_frames_and_matches_hand_value() {
        let empty = grid();
        let mut a = grid();
        a.mark_obstacle(5, 5, Source::Lidar);
        let mut b = grid();
        b.mark_obstacle(6, 5, Source::Lidar); // centroid shifted one cell in x
        let d = centroid_drift(&[empty.clone(), a.clone(), b.clone()]).unwrap();
        // centroids 0.05 m apart; each is 0.025 m from the mean
        assert!((d - 0.025).abs() < 1e-12);
        assert!(matches!(
            centroid_drift(&[empty, a]),
            Err(MetricsError::TooFewFrames { .. })
        ));
    }

    #[test]
    fn depth_metrics_match_hand_computation() {
        let mut gt = DepthFrame::zeroed(4, 1, 0.0);
        gt.depth = vec![0.5, 1.0, 2.0, 0.1]; // 0.1 falls outside the band
        let mut pred = gt.clone();
        pred.depth = vec![0.6, 1.0, 1.5, 9.0];
        let m = depth_metrics(&pred, &gt, 0.3, 3.0).unwrap();
        assert_eq!(m.count, 3);
        assert!((m.mae - (0.1 + 0.0 + 0.5) / 3.0).abs() < 1e-12);
        assert!((m.rmse - ((0.01 + 0.0 + 0.25) / 3.0f64).sqrt()).abs() < 1e-12);
        assert!((m.abs_rel - (0.2 + 0.0 + 0.25) / 3.0).abs() < 1e-12);
        // delta < 1.25 holds for 0.6/0.5 = 1.2 and 1.0, fails for 2.0/1.5
        assert!((m.delta1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn depth_metrics_error_on_empty_band() {
        let gt = DepthFrame::zeroed(4, 1, 0.0);
        let pred = gt.clone();
        assert!(matches!(
            depth_metrics(&pred, &gt, 0.3, 1.0),
            Err(MetricsError::EmptyEvaluationSet)
        ));
    }

    #[test]
    fn perfect_prediction_scores_zero_error_and_full_delta() {
        let mut gt = DepthFrame::zeroed(8, 8, 0.0);
        for (i, d) in gt.depth.iter_mut().enumerate() {
            *d = 0.3 + (i % 7) as f64 * 0.1;
        }
        let m = depth_metrics(&gt.clone(), &gt, 0.3, 1.0).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.abs_rel, 0.0);
        assert_eq!(m.delta1, 1.0);
    }
}
