//! Training objectives for the depth/segmentation student: berHu regression,
//! per-pixel cross-entropy, edge-aware smoothness, and the learned
//! uncertainty weighting that combines them. All functions come with
//! analytic gradients so the pieces can be checked against finite
//! differences.

use thiserror::Error;

pub const NUM_CLASSES: usize = 6;

/// Clamp range for the log-variance weights.
pub const LOG_VAR_MIN: f64 = -2.0;
pub const LOG_VAR_MAX: f64 = 2.0;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no pixels selected by the mask")]
    EmptyMask,
    #[error("label {0} out of range (expected 0..{NUM_CLASSES})")]
    InvalidLabel(u8),
    #[error("frame dimensions do not match buffer length")]
    BadDimensions,
}

/// Threshold c = 0.2 * max |pred - target| over masked pixels.
pub fn berhu_threshold(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64, LossError> {
    check_lengths(pred, target, mask)?;
    let mut max_abs = f64::NEG_INFINITY;
    let mut any = false;
    for i in 0..pred.len() {
        if mask[i] {
            any = true;
            max_abs = max_abs.max((pred[i] - target[i]).abs());
        }
    }
    if !any {
        return Err(LossError::EmptyMask);
    }
    Ok(0.2 * max_abs)
}

fn check_lengths(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<(), LossError> {
    if pred.len() != target.len() {
        return Err(LossError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.len() != mask.len() {
        return Err(LossError::LengthMismatch(pred.len(), mask.len()));
    }
    Ok(())
}

/// berHu (reverse Huber) with an explicit threshold: mean over masked pixels
/// of |e| for |e| <= c and (e^2 + c^2) / (2c) beyond. With c = 0 every error
/// is zero and so is the loss.
pub fn berhu_with_threshold(
    pred: &[f64],
    target: &[f64],
    mask: &[bool],
    c: f64,
) -> Result<f64, LossError> {
    check_lengths(pred, target, mask)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..pred.len() {
        if !mask[i] {
            continue;
        }
        n += 1;
        let e = (pred[i] - target[i]).abs();
        sum += if e <= c || c == 0.0 {
            e
        } else {
            (e * e + c * c) / (2.0 * c)
        };
    }
    if n == 0 {
        return Err(LossError::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// berHu with the adaptive threshold c = 0.2 * max |error|.
pub fn berhu(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64, LossError> {
    let c = berhu_threshold(pred, target, mask)?;
    berhu_with_threshold(pred, target, mask, c)
}

/// Gradient of [`berhu`] with respect to `pred`, treating the threshold as a
/// constant. Unmasked entries are zero.
pub fn berhu_grad(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<Vec<f64>, LossError> {
    let c = berhu_threshold(pred, target, mask)?;
    let n = mask.iter().filter(|m| **m).count() as f64;
    let mut grad = vec![0.0; pred.len()];
    for i in 0..pred.len() {
        if !mask[i] {
            continue;
        }
        let e = pred[i] - target[i];
        grad[i] = if e.abs() <= c || c == 0.0 {
            e.signum() / n
        } else {
            e / (c * n)
        };
        if e == 0.0 {
            grad[i] = 0.0;
        }
    }
    Ok(grad)
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Mean negative log-likelihood over pixels. `logits` holds `NUM_CLASSES`
/// values per pixel, row-major.
pub fn cross_entropy(logits: &[f64], labels: &[u8]) -> Result<f64, LossError> {
    if logits.len() != labels.len() * NUM_CLASSES {
        return Err(LossError::LengthMismatch(logits.len(), labels.len() * NUM_CLASSES));
    }
    if labels.is_empty() {
        return Err(LossError::EmptyMask);
    }
    let mut sum = 0.0;
    for (k, &label) in labels.iter().enumerate() {
        if label as usize >= NUM_CLASSES {
            return Err(LossError::InvalidLabel(label));
        }
        let row = &logits[k * NUM_CLASSES..(k + 1) * NUM_CLASSES];
        let p = softmax(row);
        sum += -p[label as usize].max(f64::MIN_POSITIVE).ln();
    }
    Ok(sum / labels.len() as f64)
}

/// Gradient of [`cross_entropy`] with respect to the logits.
pub fn cross_entropy_grad(logits: &[f64], labels: &[u8]) -> Result<Vec<f64>, LossError> {
    if logits.len() != labels.len() * NUM_CLASSES {
        return Err(LossError::LengthMismatch(logits.len(), labels.len() * NUM_CLASSES));
    }
    if labels.is_empty() {
        return Err(LossError::EmptyMask);
    }
    let n = labels.len() as f64;
    let mut grad = vec![0.0; logits.len()];
    for (k, &label) in labels.iter().enumerate() {
        if label as usize >= NUM_CLASSES {
            return Err(LossError::InvalidLabel(label));
        }
        let row = &logits[k * NUM_CLASSES..(k + 1) * NUM_CLASSES];
        let p = softmax(row);
        for c in 0..NUM_CLASSES {
            grad[k * NUM_CLASSES + c] =
                (p[c] - if c == label as usize { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok(grad)
}

/// Edge-aware smoothness: mean over forward-difference pairs of
/// |d(x+1) - d(x)| * exp(-|I(x+1) - I(x)|), in x and y. Image gradients gate
/// the depth penalty so discontinuities at intensity edges are free.
pub fn edge_aware_smoothness(
    depth: &[f64],
    image: &[f64],
    width: usize,
    height: usize,
) -> Result<f64, LossError> {
    if depth.len() != width * height || image.len() != width * height {
        return Err(LossError::BadDimensions);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in 0..height {
        for u in 0..width {
            let i = v * width + u;
            if u + 1 < width {
                sum += (depth[i + 1] - depth[i]).abs() * (-(image[i + 1] - image[i]).abs()).exp();
                n += 1;
            }
            if v + 1 < height {
                let j = i + width;
                sum += (depth[j] - depth[i]).abs() * (-(image[j] - image[i]).abs()).exp();
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(LossError::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// Gradient of [`edge_aware_smoothness`] with respect to `depth`.
pub fn edge_aware_smoothness_grad(
    depth: &[f64],
    image: &[f64],
    width: usize,
    height: usize,
) -> Result<Vec<f64>, LossError> {
    if depth.len() != width * height || image.len() != width * height {
        return Err(LossError::BadDimensions);
    }
    let mut grad = vec![0.0; depth.len()];
    let mut n = 0usize;
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for v in 0..height {
        for u in 0..width {
            let i = v * width + u;
            if u + 1 < width {
                pairs.push((i, i + 1, (-(image[i + 1] - image[i]).abs()).exp()));
                n += 1;
            }
            if v + 1 < height {
                pairs.push((i, i + width, (-(image[i + width] - image[i]).abs()).exp()));
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(LossError::EmptyMask);
    }
    for (a, b, w) in pairs {
        let s = (depth[b] - depth[a]).signum();
        grad[b] += s * w / n as f64;
        grad[a] -= s * w / n as f64;
    }
    Ok(grad)
}

/// Output of the uncertainty-weighted combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedLoss {
    pub total: f64,
    /// Gradient with respect to the (unclamped) depth log-variance.
    pub grad_log_var_depth: f64,
    /// Gradient with respect to the (unclamped) semantic log-variance.
    pub grad_log_var_sem: f64,
}

/// Combine depth, semantic, and smoothness terms with learned uncertainty:
///
/// total = 0.5 * exp(-s_d) * l_depth + exp(-s_s) * l_sem
///       + 0.5 * s_d + 0.5 * s_s + lambda_e * l_smooth
///
/// where s_d, s_s are the log-variances clamped to [-2, 2]. Gradients are
/// zero where the clamp is active.
pub fn kendall_combine(
    l_depth: f64,
    l_sem: f64,
    log_var_depth: f64,
    log_var_sem: f64,
    l_smooth: f64,
    lambda_e: f64,
) -> CombinedLoss {
    let sd = log_var_depth.clamp(LOG_VAR_MIN, LOG_VAR_MAX);
    let ss = log_var_sem.clamp(LOG_VAR_MIN, LOG_VAR_MAX);
    let total = 0.5 * (-sd).exp() * l_depth
        + (-ss).exp() * l_sem
        + 0.5 * sd
        + 0.5 * ss
        + lambda_e * l_smooth;
    let in_range = |raw: f64| raw > LOG_VAR_MIN && raw < LOG_VAR_MAX;
    let grad_log_var_depth = if in_range(log_var_depth) {
        0.5 - 0.5 * (-sd).exp() * l_depth
    } else {
        0.0
    };
    let grad_log_var_sem = if in_range(log_var_sem) {
        0.5 - (-ss).exp() * l_sem
    } else {
        0.0
    };
    CombinedLoss {
        total,
        grad_log_var_depth,
        grad_log_var_sem,
    }
}
