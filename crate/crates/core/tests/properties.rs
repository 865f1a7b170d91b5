//! Randomized invariants for fusion, costmap, metrics, and loss code.

use depthfuse_core::costmap::{
    inflate, CellState, GridConfig, InflationConfig, OccupancyGrid, Source,
};
use depthfuse_core::fusion::{apply_scale, estimate_scale, fuse_depth, FusionConfig, FusionSource};
use depthfuse_core::losses::{berhu, berhu_threshold};
use depthfuse_core::metrics::iou;
use depthfuse_core::{DepthFrame, Pose2};
use proptest::prelude::*;

fn depth_frame(w: usize, h: usize) -> impl Strategy<Value = DepthFrame> {
    (
        proptest::collection::vec(0.0f64..6.0, w * h),
        proptest::collection::vec(0.0f64..1.0, w * h),
    )
        .prop_map(move |(depth, confidence)| DepthFrame {
            width: w,
            height: h,
            depth,
            confidence,
            timestamp: 0.0,
        })
}

fn random_grid(w: usize, h: usize) -> impl Strategy<Value = OccupancyGrid> {
    proptest::collection::vec(0u8..8, w * h).prop_map(move |cells| {
        let mut grid = OccupancyGrid::centered(
            &GridConfig {
                resolution: 0.05,
                width: w,
                height: h,
            },
            &Pose2::new(0.0, 0.0, 0.0),
        );
        for iy in 0..h {
            for ix in 0..w {
                if cells[iy * w + ix] == 0 {
                    grid.mark_obstacle(ix, iy, Source::Lidar);
                }
            }
        }
        grid
    })
}

proptest! {
    #[test]
    fn scale_estimation_inverts_a_known_scale(
        tof in depth_frame(12, 10),
        s in 0.5f64..4.0,
    ) {
        let cfg = FusionConfig::default();
        // prediction exactly tof / s: every gated pixel has ratio s
        let mut pred = tof.clone();
        for d in pred.depth.iter_mut() {
            *d /= s;
        }
        pred.confidence = vec![1.0; pred.depth.len()];
        match estimate_scale(&pred, &tof, &cfg) {
            Ok(est) => prop_assert!((est.s - s).abs() < 1e-9 * s),
            // too few gated pixels is a legitimate outcome for random frames
            Err(_) => {}
        }
    }

    #[test]
    fn fused_pixels_come_from_exactly_one_source(
        tof in depth_frame(12, 10),
        pred in depth_frame(12, 10),
    ) {
        let cfg = FusionConfig::default();
        let scaled = apply_scale(&pred, 1.7).unwrap();
        let fused = fuse_depth(&tof, &scaled, &cfg).unwrap();
        for i in 0..fused.depth.depth.len() {
            match fused.mask[i] {
                FusionSource::Tof => {
                    prop_assert!(cfg.tof_gate(tof.depth[i], tof.confidence[i]));
                    prop_assert_eq!(fused.depth.depth[i], tof.depth[i]);
                }
                FusionSource::Learned => {
                    prop_assert!(!cfg.tof_gate(tof.depth[i], tof.confidence[i]));
                    prop_assert_eq!(fused.depth.depth[i], scaled.depth[i]);
                }
            }
        }
    }

    #[test]
    fn inflation_is_idempotent_on_random_grids(grid in random_grid(16, 16)) {
        let cfg = InflationConfig::default();
        let mut once = grid;
        inflate(&mut once, &cfg).unwrap();
        let mut twice = once.clone();
        inflate(&mut twice, &cfg).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn inflation_never_removes_or_reclassifies_obstacles(grid in random_grid(16, 16)) {
        let before: Vec<(usize, usize)> = grid.obstacle_cells().collect();
        let mut after = grid;
        inflate(&mut after, &InflationConfig::default()).unwrap();
        let now: Vec<(usize, usize)> = after.obstacle_cells().collect();
        prop_assert_eq!(before, now);
        for (ix, iy) in after.occupied_cells() {
            if after.state_at(ix, iy) == CellState::Inflated {
                prop_assert!(after.provenance_at(ix, iy) & 8 != 0);
            }
        }
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in random_grid(12, 12), b in random_grid(12, 12)) {
        let ab = iou(&a, &b).unwrap();
        let ba = iou(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(iou(&a, &a.clone()).unwrap(), 1.0);
    }

    #[test]
    fn berhu_dominates_mean_absolute_error(
        pred in proptest::collection::vec(-3.0f64..3.0, 24),
        target in proptest::collection::vec(-3.0f64..3.0, 24),
    ) {
        let mask = vec![true; 24];
        let loss = berhu(&pred, &target, &mask).unwrap();
        let mae = pred
            .iter()
            .zip(&target)
            .map(|(p, t)| (p - t).abs())
            .sum::<f64>()
            / 24.0;
        prop_assert!(loss >= mae - 1e-12);
        let c = berhu_threshold(&pred, &target, &mask).unwrap();
        prop_assert!(c >= 0.0);
    }
}
