//! Distance-precision and overlap-success metrics.
//!
//! Precision at threshold `t` is the fraction of frames whose predicted
//! center lies within `t` pixels of ground truth; the curve samples
//! `t = 0..=50`. Success at `t` is the fraction of frames with IoU
//! strictly above `t`, sampled at `t = 0.0, 0.05, .., 1.0`, and the AUC
//! is the mean of those 21 values. The headline OSR@0.5 uses `iou >=
//! 0.5` (the common benchmark convention for the scalar rate), while
//! curve points keep the strict inequality.

use crate::error::{Error, Result};
use crate::geometry::{center_distance, iou, BoundingBox};

pub const PRECISION_POINTS: usize = 51;
pub const SUCCESS_POINTS: usize = 21;

fn check_lengths(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<()> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "prediction/ground-truth length mismatch: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    Ok(())
}

/// 51-point precision curve over center-error thresholds `0..=50` px.
pub fn precision_curve(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<Vec<f64>> {
    check_lengths(pred, gt)?;
    let errors: Vec<f64> = pred
        .iter()
        .zip(gt.iter())
        .map(|(p, g)| center_distance(p, g))
        .collect();
    let n = errors.len() as f64;
    let curve: Vec<f64> = (0..PRECISION_POINTS)
        .map(|t| errors.iter().filter(|&&e| e <= t as f64).count() as f64 / n)
        .collect();
    debug_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    Ok(curve)
}

/// 21-point success curve over IoU thresholds (strict `>`) plus its AUC.
pub fn success_curve(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<(Vec<f64>, f64)> {
    check_lengths(pred, gt)?;
    let overlaps: Vec<f64> = pred
        .iter()
        .zip(gt.iter())
        .map(|(p, g)| iou(p, g))
        .collect();
    let n = overlaps.len() as f64;
    let curve: Vec<f64> = (0..SUCCESS_POINTS)
        .map(|i| {
            let t = i as f64 * 0.05;
            overlaps.iter().filter(|&&o| o > t).count() as f64 / n
        })
        .collect();
    debug_assert!(curve.windows(2).all(|w| w[0] >= w[1]));
    let auc = curve.iter().sum::<f64>() / SUCCESS_POINTS as f64;
    Ok((curve, auc))
}

/// Distance precision rate at the headline 20-pixel threshold.
pub fn dpr_at_20(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<f64> {
    Ok(precision_curve(pred, gt)?[20])
}

/// Overlap success rate at the headline 0.5 threshold, using `iou >= 0.5`.
pub fn osr_at_half(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<f64> {
    check_lengths(pred, gt)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(gt.iter())
        .filter(|(p, g)| iou(p, g) >= 0.5)
        .count() as f64
        / n)
}
