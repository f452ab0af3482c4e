//! Verification of tracked boxes against the initial target appearance,
//! and sliding-window re-detection when verification fails.
//!
//! The default verifier keeps a feature template extracted from the
//! first-frame ground-truth box and never updates it. A candidate box is
//! scored by Pearson correlation between its features and the template,
//! calibrated from `[0, 1]` onto `[0, 2]` so the pass threshold `tau1 =
//! 1.0` and detection-acceptance threshold `tau2 = 1.6` correspond to
//! correlations 0.5 and 0.8. Re-detection slides candidate boxes over a
//! square region of side `beta * sqrt(w^2 + h^2)` around the failed box;
//! while detections stay unreliable the region grows and the engine
//! verifies more often, and an accepted detection restores both.
//!
//! Verifier features are contrast-standardized cell intensities plus
//! per-cell normalized orientation histograms, both invariant under
//! positive affine remaps of pixel values, so the correlation score
//! only responds to structure.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::frame::{crop_patch, resize_bilinear, Frame};
use crate::geometry::{center_distance, BoundingBox};

/// Verdict on one tracked box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

/// What the engine should do with the verification interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalAction {
    /// Leave the interval as it is (verification passed).
    Keep,
    /// Halve the interval; detection has not recovered the target yet.
    Decrease,
    /// Restore the default interval; a detection was accepted.
    Restore,
}

/// Outcome of verifying one box, including an optional correction.
#[derive(Debug, Clone)]
pub struct Verification {
    pub verdict: Verdict,
    pub score: f64,
    /// Corrected box, present only on failure with an accepted detection.
    pub correction: Option<BoundingBox>,
    /// Best detection score, when a detection ran.
    pub detection_score: Option<f64>,
    pub interval: IntervalAction,
    /// Current search-region scale after adaptation, when meaningful.
    pub beta: Option<f64>,
}

/// A verification strategy the engine can drive.
///
/// Implementations own whatever appearance model and search state they
/// need; the engine only sees `(frame, box) -> Verification`.
pub trait Verifier {
    /// Learns the target from the ground-truth box on the first frame.
    fn init(&mut self, _frame: &Frame, _target: &BoundingBox) -> Result<()> {
        Ok(())
    }

    /// Verifies one tracked box, re-detecting on failure.
    fn process(&mut self, frame: &Frame, tracked: &BoundingBox) -> Verification;
}

/// Thresholds and sliding-window parameters for re-detection.
#[derive(Debug, Clone)]
pub struct DetectionConfig {
    /// Pass threshold: verification fails strictly below this score.
    pub tau1: f64,
    /// Acceptance threshold for detections; must be at least `tau1`.
    pub tau2: f64,
    /// Current search-region scale.
    pub beta: f64,
    /// Value `beta` is restored to after an accepted detection.
    pub beta_initial: f64,
    pub beta_max: f64,
    /// Added to `beta` after each rejected detection.
    pub beta_step: f64,
    /// Candidate lattice step in pixels; `None` derives it from the box
    /// as `max(1, floor(min(w, h) / 4))`.
    pub stride: Option<f64>,
    pub candidate_scales: Vec<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            tau1: 1.0,
            tau2: 1.6,
            beta: 1.5,
            beta_initial: 1.5,
            beta_max: 4.0,
            beta_step: 0.5,
            stride: None,
            candidate_scales: vec![0.95, 1.0, 1.05],
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau2 < self.tau1 {
            return Err(Error::InvalidConfig(
                "tau2 must be at least tau1: a correction is held to a stricter standard".into(),
            ));
        }
        if self.beta < 1.0 || self.beta_initial < 1.0 {
            return Err(Error::InvalidConfig("beta must be at least 1".into()));
        }
        if self.beta_max < self.beta_initial {
            return Err(Error::InvalidConfig("beta_max must be at least beta".into()));
        }
        if let Some(s) = self.stride {
            if s < 1.0 {
                return Err(Error::InvalidConfig("stride must be at least 1 pixel".into()));
            }
        }
        if self.candidate_scales.is_empty() || self.candidate_scales.iter().any(|&r| r <= 0.0) {
            return Err(Error::InvalidConfig(
                "candidate scales must be positive and non-empty".into(),
            ));
        }
        Ok(())
    }

    fn stride_for(&self, tracked: &BoundingBox) -> f64 {
        match self.stride {
            Some(s) => s,
            None => (tracked.w.min(tracked.h) / 4.0).floor().max(1.0),
        }
    }
}

/// A scored candidate box.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub bbox: BoundingBox,
    pub score: f64,
}

/// Target appearance captured on the first frame; immutable afterwards.
#[derive(Debug, Clone)]
pub struct VerifierTemplate {
    features: Vec<f64>,
    canonical: (usize, usize),
    cell_size: usize,
}

impl VerifierTemplate {
    /// Extracts the template from the initial ground-truth box.
    pub fn new(
        frame: &Frame,
        target: &BoundingBox,
        canonical: (usize, usize),
        cell_size: usize,
    ) -> Result<Self> {
        let features = box_features(frame, target, canonical, cell_size)?;
        Ok(Self {
            features,
            canonical,
            cell_size,
        })
    }

    /// Verification score of `bbox` on `frame`, in `[0, 2]`.
    ///
    /// `2 * max(0, rho)` where `rho` is the Pearson correlation between
    /// the template features and the candidate features. Zero-variance
    /// candidates score 0.
    pub fn score(&self, frame: &Frame, bbox: &BoundingBox) -> f64 {
        let features = box_features(frame, bbox, self.canonical, self.cell_size)
            .expect("canonical size always fits a cell");
        2.0 * pearson(&self.features, &features).max(0.0)
    }

    /// Pass/fail verdict: a score strictly below `tau1` fails.
    pub fn verify(&self, frame: &Frame, bbox: &BoundingBox, cfg: &DetectionConfig) -> (Verdict, f64) {
        let score = self.score(frame, bbox);
        let verdict = if score < cfg.tau1 {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        (verdict, score)
    }

    /// Best-scoring candidate in the local region around `tracked`.
    ///
    /// Ties go to the candidate whose center is closest to the tracked
    /// box, then to generation order.
    pub fn detect(&self, frame: &Frame, tracked: &BoundingBox, cfg: &DetectionConfig) -> Candidate {
        let mut best: Option<(Candidate, f64)> = None;
        for bbox in generate_candidates(tracked, frame, cfg) {
            let score = self.score(frame, &bbox);
            let dist = center_distance(&bbox, tracked);
            let better = match &best {
                None => true,
                Some((cur, cur_dist)) => {
                    score > cur.score || (score == cur.score && dist < *cur_dist)
                }
            };
            if better {
                best = Some((Candidate { bbox, score }, dist));
            }
        }
        best.expect("candidate lattice always contains the region center").0
    }
}

/// Side of the square search region for a failed box.
pub fn region_side(tracked: &BoundingBox, beta: f64) -> f64 {
    beta * tracked.diagonal()
}

/// Sliding-window candidate boxes over the local search region.
///
/// Centers form a lattice of step `stride` centered on the tracked box,
/// clipped to the square region of side `beta * sqrt(w^2 + h^2)`; each
/// center carries one box per candidate scale. Ordering is row-major
/// over centers, then scale.
pub fn generate_candidates(
    tracked: &BoundingBox,
    _frame: &Frame,
    cfg: &DetectionConfig,
) -> Vec<BoundingBox> {
    let (cx, cy) = tracked.center();
    let stride = cfg.stride_for(tracked);
    let half = region_side(tracked, cfg.beta) / 2.0;
    let k = (half / stride).floor() as i64;
    let mut out = Vec::new();
    for ky in -k..=k {
        for kx in -k..=k {
            for &ratio in &cfg.candidate_scales {
                out.push(BoundingBox::from_center(
                    cx + kx as f64 * stride,
                    cy + ky as f64 * stride,
                    tracked.w * ratio,
                    tracked.h * ratio,
                ));
            }
        }
    }
    out
}

/// Applies the adaptive-search policy to a detection score.
///
/// An accepted detection (`score >= tau2`) restores the search region to
/// its initial size; a rejected one grows it by `beta_step` up to
/// `beta_max`. Returns the updated config and whether the detection was
/// accepted.
pub fn adapt_search(cfg: &DetectionConfig, detection_score: f64) -> (DetectionConfig, bool) {
    let mut next = cfg.clone();
    if detection_score >= cfg.tau2 {
        next.beta = cfg.beta_initial;
        (next, true)
    } else {
        next.beta = (cfg.beta + cfg.beta_step).min(cfg.beta_max);
        (next, false)
    }
}

/// Default verifier: correlation against the first-frame template with
/// sliding-window re-detection.
#[derive(Debug, Clone)]
pub struct CorrelationVerifier {
    cfg: DetectionConfig,
    canonical: (usize, usize),
    cell_size: usize,
    template: Option<VerifierTemplate>,
}

impl CorrelationVerifier {
    pub fn new(cfg: DetectionConfig) -> Self {
        Self {
            cfg,
            canonical: (32, 32),
            cell_size: 4,
            template: None,
        }
    }

    pub fn with_canonical(mut self, side: usize) -> Self {
        self.canonical = (side.max(self.cell_size), side.max(self.cell_size));
        self
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.cfg
    }
}

impl Verifier for CorrelationVerifier {
    fn init(&mut self, frame: &Frame, target: &BoundingBox) -> Result<()> {
        self.cfg.validate()?;
        self.template = Some(VerifierTemplate::new(
            frame,
            target,
            self.canonical,
            self.cell_size,
        )?);
        Ok(())
    }

    fn process(&mut self, frame: &Frame, tracked: &BoundingBox) -> Verification {
        let template = self
            .template
            .as_ref()
            .expect("verifier processed a request before initialization");
        let (verdict, score) = template.verify(frame, tracked, &self.cfg);
        if verdict == Verdict::Pass {
            return Verification {
                verdict,
                score,
                correction: None,
                detection_score: None,
                interval: IntervalAction::Keep,
                beta: Some(self.cfg.beta),
            };
        }
        let detection = template.detect(frame, tracked, &self.cfg);
        let (next_cfg, accepted) = adapt_search(&self.cfg, detection.score);
        self.cfg = next_cfg;
        Verification {
            verdict,
            score,
            correction: accepted.then_some(detection.bbox),
            detection_score: Some(detection.score),
            interval: if accepted {
                IntervalAction::Restore
            } else {
                IntervalAction::Decrease
            },
            beta: Some(self.cfg.beta),
        }
    }
}

/// Scripted always-pass verifier for protocol and throughput tests.
#[derive(Debug, Clone, Default)]
pub struct AlwaysPass;

impl Verifier for AlwaysPass {
    fn process(&mut self, _frame: &Frame, _tracked: &BoundingBox) -> Verification {
        Verification {
            verdict: Verdict::Pass,
            score: 2.0,
            correction: None,
            detection_score: None,
            interval: IntervalAction::Keep,
            beta: None,
        }
    }
}

/// Per-frame scripted action for [`ScriptedVerifier`].
#[derive(Debug, Clone)]
pub enum ScriptAction {
    Pass,
    /// Fail and hand back this corrected box (detection accepted).
    FailCorrect(BoundingBox),
    /// Fail with no acceptable detection; the engine shrinks the interval.
    FailDecrease,
}

/// Verifier that replays a fixed per-frame script; unscripted frames pass.
#[derive(Debug, Clone, Default)]
pub struct ScriptedVerifier {
    actions: HashMap<usize, ScriptAction>,
}

impl ScriptedVerifier {
    pub fn new(actions: impl IntoIterator<Item = (usize, ScriptAction)>) -> Self {
        Self {
            actions: actions.into_iter().collect(),
        }
    }
}

impl Verifier for ScriptedVerifier {
    fn process(&mut self, frame: &Frame, _tracked: &BoundingBox) -> Verification {
        match self.actions.get(&frame.index) {
            None | Some(ScriptAction::Pass) => Verification {
                verdict: Verdict::Pass,
                score: 2.0,
                correction: None,
                detection_score: None,
                interval: IntervalAction::Keep,
                beta: None,
            },
            Some(ScriptAction::FailCorrect(bbox)) => Verification {
                verdict: Verdict::Fail,
                score: 0.0,
                correction: Some(*bbox),
                detection_score: Some(2.0),
                interval: IntervalAction::Restore,
                beta: None,
            },
            Some(ScriptAction::FailDecrease) => Verification {
                verdict: Verdict::Fail,
                score: 0.0,
                correction: None,
                detection_score: Some(0.0),
                interval: IntervalAction::Decrease,
                beta: None,
            },
        }
    }
}

/// Affine-invariant cell features for verification: contrast-normalized
/// mean intensity plus L2-normalized orientation histograms per cell.
fn box_features(
    frame: &Frame,
    bbox: &BoundingBox,
    canonical: (usize, usize),
    cell_size: usize,
) -> Result<Vec<f64>> {
    let (cx, cy) = bbox.center();
    let patch = crop_patch(frame, (cx, cy), (bbox.w, bbox.h));
    let resized = resize_bilinear(&patch, canonical.0, canonical.1);
    cell_features(&resized, cell_size)
}

const BINS: usize = 9;
const NORM_EPS: f64 = 1e-5;

fn cell_features(patch: &Array2<f64>, cell_size: usize) -> Result<Vec<f64>> {
    let (ph, pw) = patch.dim();
    let rows = ph / cell_size;
    let cols = pw / cell_size;
    if rows == 0 || cols == 0 {
        return Err(Error::PatchTooSmall {
            patch: (ph, pw),
            cell_size,
        });
    }
    let clamped = |y: i64, x: i64| -> f64 {
        patch[[
            y.clamp(0, ph as i64 - 1) as usize,
            x.clamp(0, pw as i64 - 1) as usize,
        ]]
    };
    let mut features = vec![0.0; rows * cols * (1 + BINS)];
    let mut mean_total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let at = (r * cols + c) * (1 + BINS);
            let mut hist = [0.0f64; BINS];
            let mut mean = 0.0;
            for py in (r * cell_size)..((r + 1) * cell_size) {
                for px in (c * cell_size)..((c + 1) * cell_size) {
                    mean += patch[[py, px]];
                    let gx = clamped(py as i64, px as i64 + 1) - clamped(py as i64, px as i64 - 1);
                    let gy = clamped(py as i64 + 1, px as i64) - clamped(py as i64 - 1, px as i64);
                    let mag = gx.hypot(gy);
                    if mag > 0.0 {
                        let mut angle = gy.atan2(gx);
                        if angle < 0.0 {
                            angle += std::f64::consts::PI;
                        }
                        if angle >= std::f64::consts::PI {
                            angle -= std::f64::consts::PI;
                        }
                        let bin = ((angle / (std::f64::consts::PI / BINS as f64)).floor()
                            as usize)
                            .min(BINS - 1);
                        hist[bin] += mag;
                    }
                }
            }
            let norm = (hist.iter().map(|v| v * v).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
            for (b, &v) in hist.iter().enumerate() {
                features[at + 1 + b] = v / norm;
            }
            mean /= (cell_size * cell_size) as f64;
            mean_total += mean;
            features[at] = mean;
        }
    }
    // Standardize the intensity channel over the patch so it is invariant
    // under positive affine remaps, like the normalized histograms.
    let mean_total = mean_total / (rows * cols) as f64;
    let mut var = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let d = features[(r * cols + c) * (1 + BINS)] - mean_total;
            var += d * d;
        }
    }
    let std = (var / (rows * cols) as f64).sqrt();
    for r in 0..rows {
        for c in 0..cols {
            let at = (r * cols + c) * (1 + BINS);
            features[at] = if std > 0.0 {
                (features[at] - mean_total) / std
            } else {
                0.0
            };
        }
    }
    Ok(features)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}
