//! Frame-to-frame target tracker built on the correlation filter.
//!
//! Per frame: crop a padded search patch at the previous position, score
//! it against the translation filter, move to the response peak, estimate
//! scale with the pyramid filter, then blend the filters with the new
//! appearance. All state is a plain value so the engine can snapshot and
//! restore it around trace-backs.

use crate::error::{Error, Result};
use crate::features::{apply_hann_window, extract_features, pca_fit, PcaProjector};
use crate::filter::{locate, make_label, respond, train_initial, update, DesiredOutput, FilterModel};
use crate::frame::{crop_patch, resize_bilinear, round_half_up, Frame};
use crate::geometry::BoundingBox;
use crate::scale::{ScaleModel, ScaleParams};

/// A frame-sequential tracker the engine can drive, snapshot and rewind.
pub trait Tracker {
    /// Full tracker state; cloning must capture everything `restore`
    /// needs to resume from that point.
    type State: Clone;

    /// Learns the target from the ground-truth box on the first frame.
    fn init(&mut self, frame: &Frame, target: &BoundingBox) -> Result<()>;

    /// Locates the target on the next frame and adapts the model.
    fn step(&mut self, frame: &Frame) -> Result<BoundingBox>;

    /// Relearns from scratch at a corrected box, keeping only the
    /// calibration fixed at initialization (e.g. the feature projector).
    fn reinit(&mut self, frame: &Frame, target: &BoundingBox) -> Result<()>;

    fn state(&self) -> Self::State;

    fn restore(&mut self, state: &Self::State);
}

/// Tunables for [`CorrelationTracker`].
#[derive(Debug, Clone)]
pub struct TrackerParams {
    pub lambda: f64,
    pub eta: f64,
    pub cell_size: usize,
    /// Channels kept after PCA compression.
    pub pca_dims: usize,
    /// Label standard deviation as a fraction of the geometric-mean map side.
    pub sigma_factor: f64,
    /// Search/training patch size as a multiple of the target box.
    pub padding: f64,
    /// Parabolic sub-cell peak refinement; off for reproducibility.
    pub subcell_refine: bool,
    pub scale: ScaleParams,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            eta: 0.025,
            cell_size: 4,
            pca_dims: 5,
            sigma_factor: 1.0 / 16.0,
            padding: 2.0,
            subcell_refine: false,
            scale: ScaleParams::default(),
        }
    }
}

/// Everything the tracker knows at one point in time.
#[derive(Debug, Clone)]
pub struct TrackerState {
    projector: PcaProjector,
    label: DesiredOutput,
    /// Pixel size `(rows, cols)` search patches are resized to.
    template: (usize, usize),
    /// Target center `(x, y)`.
    position: (f64, f64),
    /// Target size `(w, h)` at scale 1.
    base_size: (f64, f64),
    model: FilterModel,
    scale: ScaleModel,
}

/// Correlation-filter tracker with scale estimation and PCA-compressed
/// features.
#[derive(Debug, Clone, Default)]
pub struct CorrelationTracker {
    params: TrackerParams,
    inner: Option<TrackerState>,
}

/// Longest template side in pixels; larger targets are tracked at
/// reduced resolution.
const TEMPLATE_CAP: usize = 96;

impl CorrelationTracker {
    pub fn new(params: TrackerParams) -> Self {
        Self {
            params,
            inner: None,
        }
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    /// The current target box, if initialized.
    pub fn current_box(&self) -> Option<BoundingBox> {
        self.inner.as_ref().map(|s| {
            let scale = s.scale.current_scale();
            BoundingBox::from_center(
                s.position.0,
                s.position.1,
                s.base_size.0 * scale,
                s.base_size.1 * scale,
            )
        })
    }

    fn template_for(&self, base_size: (f64, f64)) -> (usize, usize) {
        let pw = self.params.padding * base_size.0;
        let ph = self.params.padding * base_size.1;
        let mut w = (round_half_up(pw) as usize).max(self.params.cell_size);
        let mut h = (round_half_up(ph) as usize).max(self.params.cell_size);
        let longest = w.max(h);
        if longest > TEMPLATE_CAP {
            let f = TEMPLATE_CAP as f64 / longest as f64;
            w = (round_half_up(w as f64 * f) as usize).max(self.params.cell_size);
            h = (round_half_up(h as f64 * f) as usize).max(self.params.cell_size);
        }
        (h, w)
    }

    fn features_at(
        &self,
        projector: &PcaProjector,
        template: (usize, usize),
        frame: &Frame,
        center: (f64, f64),
        patch_size: (f64, f64),
    ) -> Result<crate::features::FeatureMap> {
        let patch = crop_patch(frame, center, patch_size);
        let resized = resize_bilinear(&patch, template.0, template.1);
        let raw = extract_features(&resized, self.params.cell_size)?;
        Ok(apply_hann_window(&projector.project(&raw)?))
    }

    fn learn(
        &self,
        frame: &Frame,
        target: &BoundingBox,
        projector: Option<PcaProjector>,
    ) -> Result<TrackerState> {
        let position = target.center();
        let base_size = (target.w, target.h);
        let template = self.template_for(base_size);
        let patch_size = (
            self.params.padding * base_size.0,
            self.params.padding * base_size.1,
        );

        let projector = match projector {
            Some(p) => p,
            None => {
                let patch = crop_patch(frame, position, patch_size);
                let resized = resize_bilinear(&patch, template.0, template.1);
                let raw = extract_features(&resized, self.params.cell_size)?;
                pca_fit(std::slice::from_ref(&raw), self.params.pca_dims)?
            }
        };

        let features = self.features_at(&projector, template, frame, position, patch_size)?;
        let label = make_label(features.spatial_dim(), self.params.sigma_factor);
        let model = train_initial(&features, &label, self.params.lambda, self.params.eta)?;
        let scale = ScaleModel::init(
            frame,
            position,
            base_size,
            &projector,
            self.params.scale.clone(),
        )?;
        Ok(TrackerState {
            projector,
            label,
            template,
            position,
            base_size,
            model,
            scale,
        })
    }
}

impl Tracker for CorrelationTracker {
    type State = TrackerState;

    fn init(&mut self, frame: &Frame, target: &BoundingBox) -> Result<()> {
        self.inner = Some(self.learn(frame, target, None)?);
        Ok(())
    }

    fn step(&mut self, frame: &Frame) -> Result<BoundingBox> {
        let subcell = self.params.subcell_refine;
        let padding = self.params.padding;
        let cell = self.params.cell_size as f64;
        let state = self
            .inner
            .as_mut()
            .ok_or_else(|| Error::Protocol("tracker stepped before initialization".into()))?;

        let scale = state.scale.current_scale();
        let patch_size = (
            padding * state.base_size.0 * scale,
            padding * state.base_size.1 * scale,
        );
        let patch = crop_patch(frame, state.position, patch_size);
        let (patch_rows, patch_cols) = patch.dim();
        let resized = resize_bilinear(&patch, state.template.0, state.template.1);
        let raw = extract_features(&resized, self.params.cell_size)?;
        let features = apply_hann_window(&state.projector.project(&raw)?);
        let y = respond(&state.model, &features)?;
        let ((peak_r, peak_c), _) = locate(&y);
        let (center_r, center_c) = state.label.center();
        let mut dr = peak_r as f64 - center_r as f64;
        let mut dc = peak_c as f64 - center_c as f64;
        if subcell {
            let (rows, cols) = y.dim();
            dr += parabolic_offset(
                y[[(peak_r + rows - 1) % rows, peak_c]],
                y[[peak_r, peak_c]],
                y[[(peak_r + 1) % rows, peak_c]],
            );
            dc += parabolic_offset(
                y[[peak_r, (peak_c + cols - 1) % cols]],
                y[[peak_r, peak_c]],
                y[[peak_r, (peak_c + 1) % cols]],
            );
        }
        // Cells -> template pixels -> search-patch pixels.
        let dx = dc * cell * patch_cols as f64 / state.template.1 as f64;
        let dy = dr * cell * patch_rows as f64 / state.template.0 as f64;
        state.position.0 = (state.position.0 + dx).clamp(0.0, frame.width() as f64 - 1.0);
        state.position.1 = (state.position.1 + dy).clamp(0.0, frame.height() as f64 - 1.0);

        let scale = state
            .scale
            .estimate_scale(frame, state.position, state.base_size)?;

        let train_size = (
            padding * state.base_size.0 * scale,
            padding * state.base_size.1 * scale,
        );
        let train_patch = crop_patch(frame, state.position, train_size);
        let train_resized = resize_bilinear(&train_patch, state.template.0, state.template.1);
        let train_raw = extract_features(&train_resized, self.params.cell_size)?;
        let train_features = apply_hann_window(&state.projector.project(&train_raw)?);
        state.model = update(&state.model, &train_features)?;

        Ok(BoundingBox::from_center(
            state.position.0,
            state.position.1,
            state.base_size.0 * scale,
            state.base_size.1 * scale,
        ))
    }

    fn reinit(&mut self, frame: &Frame, target: &BoundingBox) -> Result<()> {
        let projector = self
            .inner
            .as_ref()
            .map(|s| s.projector.clone())
            .ok_or_else(|| Error::Protocol("tracker corrected before initialization".into()))?;
        self.inner = Some(self.learn(frame, target, Some(projector))?);
        Ok(())
    }

    fn state(&self) -> TrackerState {
        self.inner
            .as_ref()
            .expect("tracker state requested before initialization")
            .clone()
    }

    fn restore(&mut self, state: &TrackerState) {
        self.inner = Some(state.clone());
    }
}

/// Offset in `[-0.5, 0.5]` of a parabola fitted through three samples.
fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}
