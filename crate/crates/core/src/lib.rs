//! Self-calibrating depth fusion for degraded ToF sensors.
//!
//! A ToF camera that loses pixels on reflective surfaces still returns enough
//! valid depth to anchor a relative monocular prediction to metric scale. This
//! crate implements that bootstrap: per-frame median scale calibration,
//! selective per-pixel fusion, back-projection into a 2D occupancy costmap
//! with several inflation strategies, and the evaluation metrics used to
//! compare costmap configurations. A parametric corridor renderer with
//! analytic ray casting stands in for recorded sensor data so every stage is
//! testable against hand-derivable values.

pub mod costmap;
pub mod frame;
pub mod fusion;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod synth;

pub use frame::{DepthFrame, LabelMap, LidarScan, Pose2, SemClass};
