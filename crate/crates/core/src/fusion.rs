//! The bootstrap core: median scale calibration of relative depth against
//! surviving ToF pixels, the selective per-pixel fusion rule, and hybrid
//! supervision targets.

use thiserror::Error;

use crate::frame::DepthFrame;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("frames differ in size: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: usize,
        a_h: usize,
        b_w: usize,
        b_h: usize,
    },
    #[error(
        "scale estimate unreliable: {valid_fraction:.4} valid coverage \
         (minimum {min_valid_fraction:.4}, {valid_pixel_count} qualifying pixels)"
    )]
    UnreliableScale {
        valid_fraction: f64,
        min_valid_fraction: f64,
        valid_pixel_count: usize,
    },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),
}

/// Gates shared by calibration and fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Confidence threshold: ToF pixels with confidence >= tau pass.
    pub tau: f64,
    /// Minimum relative prediction depth admitted to the median, meters.
    pub epsilon: f64,
    /// ToF validity range (strict: d_min < d < d_max), meters.
    pub d_min: f64,
    pub d_max: f64,
    /// Calibration aborts below this fraction of qualifying pixels.
    pub min_valid_fraction: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            tau: 0.5,
            epsilon: 1e-3,
            d_min: 0.05,
            d_max: 5.0,
            min_valid_fraction: 0.05,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(FusionError::InvalidConfig(format!("tau {} outside (0, 1]", self.tau)));
        }
        if !(self.d_min > 0.0 && self.d_min < self.d_max) {
            return Err(FusionError::InvalidConfig(format!(
                "need 0 < d_min < d_max, got [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(FusionError::InvalidConfig("epsilon must be positive".into()));
        }
        if !(self.min_valid_fraction > 0.0 && self.min_valid_fraction < 1.0) {
            return Err(FusionError::InvalidConfig(
                "min_valid_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// The ToF gate of the fusion rule: confident and strictly in range.
    #[inline]
    pub fn tof_gate(&self, depth: f64, confidence: f64) -> bool {
        confidence >= self.tau && depth > self.d_min && depth < self.d_max
    }
}

/// Result of per-frame median scale calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    /// Multiplier converting relative prediction depth to meters.
    pub s: f64,
    pub valid_pixel_count: usize,
    /// Qualifying pixels / total pixels.
    pub valid_fraction: f64,
}

/// Which signal a fused pixel came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionSource {
    Tof,
    Learned,
}

/// Fused frame plus per-pixel provenance.
#[derive(Debug, Clone)]
pub struct FusedFrame {
    pub depth: DepthFrame,
    pub mask: Vec<FusionSource>,
}

fn check_dims(a: &DepthFrame, b: &DepthFrame) -> Result<(), FusionError> {
    if a.width != b.width || a.height != b.height {
        return Err(FusionError::DimensionMismatch {
            a_w: a.width,
            a_h: a.height,
            b_w: b.width,
            b_h: b.height,
        });
    }
    Ok(())
}

/// Median with the even-count convention: midpoint of the two central values.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Estimate the relative-to-metric scale as the median of d_tof / d_pred over
/// pixels passing the confidence gate, the ToF range gate, and the minimum
/// prediction depth epsilon.
pub fn estimate_scale(
    pred: &DepthFrame,
    tof: &DepthFrame,
    cfg: &FusionConfig,
) -> Result<ScaleEstimate, FusionError> {
    check_dims(pred, tof)?;
    let mut ratios = Vec::new();
    for i in 0..tof.len() {
        let d_tof = tof.depth[i];
        let d_pred = pred.depth[i];
        if cfg.tof_gate(d_tof, tof.confidence[i]) && d_pred > cfg.epsilon {
            ratios.push(d_tof / d_pred);
        }
    }
    let total = tof.len().max(1);
    let valid_fraction = ratios.len() as f64 / total as f64;
    if ratios.is_empty() || valid_fraction < cfg.min_valid_fraction {
        return Err(FusionError::UnreliableScale {
            valid_fraction,
            min_valid_fraction: cfg.min_valid_fraction,
            valid_pixel_count: ratios.len(),
        });
    }
    let count = ratios.len();
    Ok(ScaleEstimate {
        s: median(&mut ratios),
        valid_pixel_count: count,
        valid_fraction,
    })
}

/// Per-pixel multiply by the scale factor; confidence passes through.
pub fn apply_scale(pred: &DepthFrame, s: f64) -> Result<DepthFrame, FusionError> {
    if s <= 0.0 {
        return Err(FusionError::NonPositiveScale(s));
    }
    let mut out = pred.clone();
    for d in &mut out.depth {
        *d *= s;
    }
    Ok(out)
}

/// Selective fusion: keep the ToF value wherever its gate passes, otherwise
/// substitute the (already scaled) learned value. ToF-sourced pixels get
/// confidence 1; learned pixels keep the learned confidence.
pub fn fuse_depth(
    tof: &DepthFrame,
    pred_metric: &DepthFrame,
    cfg: &FusionConfig,
) -> Result<FusedFrame, FusionError> {
    check_dims(tof, pred_metric)?;
    let n = tof.len();
    let mut depth = Vec::with_capacity(n);
    let mut confidence = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for i in 0..n {
        if cfg.tof_gate(tof.depth[i], tof.confidence[i]) {
            depth.push(tof.depth[i]);
            confidence.push(1.0);
            mask.push(FusionSource::Tof);
        } else {
            depth.push(pred_metric.depth[i]);
            confidence.push(pred_metric.confidence[i]);
            mask.push(FusionSource::Learned);
        }
    }
    Ok(FusedFrame {
        depth: DepthFrame {
            width: tof.width,
            height: tof.height,
            depth,
            confidence,
            timestamp: tof.timestamp,
        },
        mask,
    })
}

/// Training-target construction mirroring the fusion rule: ToF where its gate
/// passes, teacher depth elsewhere.
pub fn hybrid_target(
    tof: &DepthFrame,
    teacher: &DepthFrame,
    cfg: &FusionConfig,
) -> Result<DepthFrame, FusionError> {
    check_dims(tof, teacher)?;
    let mut out = teacher.clone();
    out.timestamp = tof.timestamp;
    for i in 0..tof.len() {
        if cfg.tof_gate(tof.depth[i], tof.confidence[i]) {
            out.depth[i] = tof.depth[i];
            out.confidence[i] = tof.confidence[i];
        }
    }
    Ok(out)
}
