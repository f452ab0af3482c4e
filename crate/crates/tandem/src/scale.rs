//! One-dimensional correlation filter over a scale pyramid.
//!
//! Each frame, `S` patches at geometrically spaced scales around the
//! current estimate are cropped, resized to a fixed template, reduced to
//! feature vectors and scored jointly with a 1-D filter along the scale
//! axis. The response argmax picks the scale correction; the filter then
//! adapts with the same linear blend used by the translation filter.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::{extract_features, PcaProjector};
use crate::fft::{fft1, ifft1};
use crate::filter::IMAG_TOLERANCE;
use crate::frame::{crop_patch, resize_bilinear, round_half_up, Frame};

/// Tunables for the scale filter.
#[derive(Debug, Clone)]
pub struct ScaleParams {
    /// Pyramid levels `S`; must be odd so the identity scale sits at the
    /// pyramid center.
    pub num_scales: usize,
    /// Ratio between adjacent pyramid levels, `> 1`.
    pub scale_step: f64,
    /// Standard deviation of the 1-D Gaussian label, in levels.
    pub sigma: f64,
    pub lambda: f64,
    pub eta: f64,
    pub cell_size: usize,
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self {
            num_scales: 17,
            scale_step: 1.02,
            sigma: 1.0,
            lambda: 0.01,
            eta: 0.025,
            cell_size: 4,
        }
    }
}

/// Scale filter state: the current scale estimate plus the 1-D filter
/// numerators/denominator over the pyramid axis.
#[derive(Debug, Clone)]
pub struct ScaleModel {
    params: ScaleParams,
    current_scale: f64,
    /// Per-feature-dimension numerators, each of length `S`.
    a: Vec<Array1<Complex64>>,
    b: Array1<f64>,
    g_hat: Array1<Complex64>,
    template: (usize, usize),
    projector: PcaProjector,
}

/// Largest pixel extent a scale patch is resized to per side.
const SCALE_TEMPLATE_CAP: usize = 32;

impl ScaleModel {
    /// Trains the scale filter on the initial target appearance.
    pub fn init(
        frame: &Frame,
        center: (f64, f64),
        base_size: (f64, f64),
        projector: &PcaProjector,
        params: ScaleParams,
    ) -> Result<Self> {
        if params.num_scales == 0 || params.num_scales % 2 == 0 {
            return Err(Error::InvalidConfig(
                "scale pyramid size must be odd and positive".into(),
            ));
        }
        if params.scale_step <= 1.0 {
            return Err(Error::InvalidConfig("scale step must exceed 1".into()));
        }
        let template = (
            (round_half_up(base_size.1) as usize)
                .clamp(params.cell_size, SCALE_TEMPLATE_CAP),
            (round_half_up(base_size.0) as usize)
                .clamp(params.cell_size, SCALE_TEMPLATE_CAP),
        );
        let label = scale_label(params.num_scales, params.sigma);
        let g_hat = fft1(&label);
        let mut model = Self {
            params,
            current_scale: 1.0,
            a: Vec::new(),
            b: Array1::zeros(0),
            g_hat,
            template,
            projector: projector.clone(),
        };
        let sample = model.sample(frame, center, base_size)?;
        let (a, b) = model.correlate_sample(&sample);
        model.a = a;
        model.b = b;
        Ok(model)
    }

    pub fn current_scale(&self) -> f64 {
        self.current_scale
    }

    pub fn num_scales(&self) -> usize {
        self.params.num_scales
    }

    /// Estimates the scale at `center`, updates the internal estimate and
    /// adapts the filter. Returns the new scale factor.
    pub fn estimate_scale(
        &mut self,
        frame: &Frame,
        center: (f64, f64),
        base_size: (f64, f64),
    ) -> Result<f64> {
        let sample = self.sample(frame, center, base_size)?;
        let y = self.respond(&sample)?;
        let center_level = self.params.num_scales / 2;
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &v) in y.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        let shift = best.0 as i64 - center_level as i64;
        let proposed = self.current_scale * self.params.scale_step.powi(shift as i32);
        self.current_scale = clamp_scale(proposed, base_size, frame);

        // Re-extract at the corrected scale and blend the filter.
        let train = self.sample(frame, center, base_size)?;
        let (a_new, b_new) = self.correlate_sample(&train);
        let eta = self.params.eta;
        for (a_old, a_fresh) in self.a.iter_mut().zip(a_new.iter()) {
            for (dst, new) in a_old.iter_mut().zip(a_fresh.iter()) {
                *dst = *dst * (1.0 - eta) + new * eta;
            }
        }
        for (dst, &new) in self.b.iter_mut().zip(b_new.iter()) {
            *dst = *dst * (1.0 - eta) + new * eta;
        }
        Ok(self.current_scale)
    }

    /// Feature matrix of the pyramid: one flattened feature vector per
    /// scale level, `M x S`.
    fn sample(
        &self,
        frame: &Frame,
        center: (f64, f64),
        base_size: (f64, f64),
    ) -> Result<Array2<f64>> {
        let s = self.params.num_scales;
        let half = s as i64 / 2;
        let mut columns: Vec<Vec<f64>> = Vec::with_capacity(s);
        for level in -half..=half {
            let factor = self.current_scale * self.params.scale_step.powi(level as i32);
            let patch = crop_patch(
                frame,
                center,
                (base_size.0 * factor, base_size.1 * factor),
            );
            let resized = resize_bilinear(&patch, self.template.0, self.template.1);
            let raw = extract_features(&resized, self.params.cell_size)?;
            let projected = self.projector.project(&raw)?;
            columns.push(projected.cells.iter().copied().collect());
        }
        let m = columns[0].len();
        let mut out = Array2::zeros((m, s));
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        Ok(out)
    }

    /// Numerators and denominator for one sample, `A^m = conj(G) F^m`,
    /// `B = sum_m |F^m|^2`.
    fn correlate_sample(&self, sample: &Array2<f64>) -> (Vec<Array1<Complex64>>, Array1<f64>) {
        let (m, s) = sample.dim();
        let mut a = Vec::with_capacity(m);
        let mut b = Array1::<f64>::zeros(s);
        for i in 0..m {
            let signal = sample.row(i).to_owned();
            let f_hat = fft1(&signal);
            for (acc, v) in b.iter_mut().zip(f_hat.iter()) {
                *acc += v.norm_sqr();
            }
            a.push(Array1::from_shape_fn(s, |k| {
                self.g_hat[k].conj() * f_hat[k]
            }));
        }
        (a, b)
    }

    fn respond(&self, sample: &Array2<f64>) -> Result<Array1<f64>> {
        if self.params.lambda == 0.0 && self.b.iter().any(|&v| v == 0.0) {
            return Err(Error::SingularDenominator);
        }
        let (m, s) = sample.dim();
        if m != self.a.len() || s != self.b.len() {
            return Err(Error::ShapeMismatch {
                expected: (self.a.len(), self.b.len(), 1),
                actual: (m, s, 1),
            });
        }
        let mut num = Array1::<Complex64>::default(s);
        for i in 0..m {
            let z_hat = fft1(&sample.row(i).to_owned());
            for (acc, (a, z)) in num.iter_mut().zip(self.a[i].iter().zip(z_hat.iter())) {
                *acc += a.conj() * z;
            }
        }
        for (v, &b) in num.iter_mut().zip(self.b.iter()) {
            *v /= Complex64::new(b + self.params.lambda, 0.0);
        }
        let y = ifft1(&num);
        let max_imag = y.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_imag < IMAG_TOLERANCE, "scale response lost symmetry");
        Ok(y.mapv(|v| v.re))
    }
}

fn scale_label(s: usize, sigma: f64) -> Array1<f64> {
    let center = s / 2;
    Array1::from_shape_fn(s, |i| {
        let d = i as f64 - center as f64;
        if d == 0.0 {
            1.0
        } else {
            (-d * d / (2.0 * sigma * sigma)).exp()
        }
    })
}

/// Keeps the target between 2 pixels and twice the frame extent.
fn clamp_scale(scale: f64, base_size: (f64, f64), frame: &Frame) -> f64 {
    let min_side = base_size.0.min(base_size.1);
    let lo = 2.0 / min_side;
    let hi = 2.0
        * (frame.width() as f64 / base_size.0).min(frame.height() as f64 / base_size.1);
    scale.clamp(lo.min(1.0), hi.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::pca_fit;
    use ndarray::Array2 as Grid;

    /// Smooth blob texture so nearby scales are distinguishable but
    /// resampling noise stays low.
    fn blob_frame(index: usize, w: usize, h: usize, cx: f64, cy: f64, radius: f64) -> Frame {
        let pixels = Grid::from_shape_fn((h, w), |(y, x)| {
            let d2 = ((x as f64 - cx) / radius).powi(2) + ((y as f64 - cy) / radius).powi(2);
            (0.9 * (-d2 * 1.8).exp() + 0.05 * ((x as f64 * 0.43).sin() * (y as f64 * 0.31).cos()))
                .clamp(0.0, 1.0)
        });
        Frame::new(index, pixels)
    }

    fn zoomed(frame: &Frame, factor: f64, center: (f64, f64)) -> Frame {
        let (h, w) = frame.pixels.dim();
        let pixels = Grid::from_shape_fn((h, w), |(y, x)| {
            // Inverse map: the content appears `factor` times larger.
            let sx = center.0 + (x as f64 - center.0) / factor;
            let sy = center.1 + (y as f64 - center.1) / factor;
            let x0 = sx.floor().clamp(0.0, (w - 1) as f64);
            let y0 = sy.floor().clamp(0.0, (h - 1) as f64);
            let x1 = (x0 + 1.0).min((w - 1) as f64);
            let y1 = (y0 + 1.0).min((h - 1) as f64);
            let fx = (sx - x0).clamp(0.0, 1.0);
            let fy = (sy - y0).clamp(0.0, 1.0);
            let p = |yy: f64, xx: f64| frame.pixels[[yy as usize, xx as usize]];
            let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
            let bot = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
            top * (1.0 - fy) + bot * fy
        });
        Frame::new(frame.index + 1, pixels)
    }

    fn fitted_projector(frame: &Frame, center: (f64, f64), size: (f64, f64)) -> PcaProjector {
        let patch = crop_patch(frame, center, size);
        let raw = extract_features(&patch, 4).unwrap();
        pca_fit(std::slice::from_ref(&raw), 5).unwrap()
    }

    #[test]
    fn single_level_pyramid_keeps_scale() {
        let frame = blob_frame(0, 120, 100, 60.0, 50.0, 14.0);
        let projector = fitted_projector(&frame, (60.0, 50.0), (32.0, 32.0));
        let params = ScaleParams {
            num_scales: 1,
            ..ScaleParams::default()
        };
        let mut model =
            ScaleModel::init(&frame, (60.0, 50.0), (32.0, 32.0), &projector, params).unwrap();
        let s = model
            .estimate_scale(&frame, (60.0, 50.0), (32.0, 32.0))
            .unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn unchanged_appearance_selects_center_level() {
        let frame = blob_frame(0, 160, 140, 80.0, 70.0, 16.0);
        let projector = fitted_projector(&frame, (80.0, 70.0), (40.0, 40.0));
        let mut model = ScaleModel::init(
            &frame,
            (80.0, 70.0),
            (40.0, 40.0),
            &projector,
            ScaleParams::default(),
        )
        .unwrap();
        let s = model
            .estimate_scale(&frame, (80.0, 70.0), (40.0, 40.0))
            .unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn zoom_by_one_step_shifts_argmax_one_level() {
        let frame = blob_frame(0, 200, 180, 100.0, 90.0, 18.0);
        let center = (100.0, 90.0);
        let size = (44.0, 44.0);
        let projector = fitted_projector(&frame, center, size);
        let params = ScaleParams {
            num_scales: 5,
            scale_step: 1.10,
            ..ScaleParams::default()
        };
        let mut model = ScaleModel::init(&frame, center, size, &projector, params).unwrap();

        let grown = zoomed(&frame, 1.10, center);
        let s = model.estimate_scale(&grown, center, size).unwrap();
        assert!(
            (s - 1.10).abs() < 1e-9,
            "expected one-level growth, got scale {s}"
        );

        let mut model2 = ScaleModel::init(&frame, center, size, &projector, ScaleParams {
            num_scales: 5,
            scale_step: 1.10,
            ..ScaleParams::default()
        })
        .unwrap();
        let shrunk = zoomed(&frame, 1.0 / 1.10, center);
        let s = model2.estimate_scale(&shrunk, center, size).unwrap();
        assert!(
            (s - 1.0 / 1.10).abs() < 1e-9,
            "expected one-level shrink, got scale {s}"
        );
    }

    #[test]
    fn even_pyramid_rejected() {
        let frame = blob_frame(0, 80, 80, 40.0, 40.0, 10.0);
        let projector = fitted_projector(&frame, (40.0, 40.0), (24.0, 24.0));
        let params = ScaleParams {
            num_scales: 4,
            ..ScaleParams::default()
        };
        assert!(
            ScaleModel::init(&frame, (40.0, 40.0), (24.0, 24.0), &projector, params).is_err()
        );
    }
}
