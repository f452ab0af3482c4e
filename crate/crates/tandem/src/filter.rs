//! Multi-channel discriminative correlation filter in the Fourier domain.
//!
//! The filter is trained on a windowed feature map against a Gaussian
//! target response. Training keeps per-channel numerators `A^l` and a
//! shared real denominator `B`; online adaptation blends new frames in
//! with learning rate `eta`, and scoring divides the correlated spectrum
//! by `B + lambda` before transforming back to the spatial domain.

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::fft::{fft2, ifft2};

/// Largest imaginary residue tolerated when a response is collapsed to
/// real values; anything above this indicates a broken spectrum.
pub const IMAG_TOLERANCE: f64 = 1e-6;

/// Target correlation response: a Gaussian bump with peak 1.0 at the
/// grid center.
#[derive(Debug, Clone)]
pub struct DesiredOutput {
    pub g: Array2<f64>,
    pub sigma_factor: f64,
}

impl DesiredOutput {
    /// Cell coordinates of the peak.
    pub fn center(&self) -> (usize, usize) {
        (self.g.nrows() / 2, self.g.ncols() / 2)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.g.dim()
    }
}

/// Builds the desired response for a `shape` map: a centered 2-D Gaussian
/// with standard deviation `sigma_factor * sqrt(rows * cols)` and peak
/// exactly 1.0.
pub fn make_label(shape: (usize, usize), sigma_factor: f64) -> DesiredOutput {
    let (rows, cols) = shape;
    assert!(rows >= 1 && cols >= 1);
    let sigma = sigma_factor * ((rows * cols) as f64).sqrt();
    let (cr, cc) = (rows / 2, cols / 2);
    let g = Array2::from_shape_fn((rows, cols), |(r, c)| {
        let d2 = (r as f64 - cr as f64).powi(2) + (c as f64 - cc as f64).powi(2);
        if d2 == 0.0 {
            1.0
        } else {
            (-d2 / (2.0 * sigma * sigma)).exp()
        }
    });
    DesiredOutput { g, sigma_factor }
}

/// Learned translation filter state.
///
/// `a[l]` are the per-channel Fourier numerators, `b` the shared real
/// denominator (a sum of squared spectral magnitudes, elementwise >= 0).
#[derive(Debug, Clone)]
pub struct FilterModel {
    a: Vec<Array2<Complex64>>,
    b: Array2<f64>,
    lambda: f64,
    eta: f64,
    label: DesiredOutput,
    g_hat: Array2<Complex64>,
    template_size: (usize, usize),
}

impl FilterModel {
    pub fn numerators(&self) -> &[Array2<Complex64>] {
        &self.a
    }

    pub fn denominator(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn label(&self) -> &DesiredOutput {
        &self.label
    }

    pub fn channels(&self) -> usize {
        self.a.len()
    }

    pub fn spatial_dim(&self) -> (usize, usize) {
        self.b.dim()
    }

    /// Pixel extent of the training patch this filter was built from.
    pub fn template_size(&self) -> (usize, usize) {
        self.template_size
    }

    fn check_shape(&self, features: &FeatureMap) -> Result<()> {
        let (rows, cols) = self.spatial_dim();
        if features.spatial_dim() != (rows, cols) || features.channels() != self.channels() {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols, self.channels()),
                actual: features.cells.dim(),
            });
        }
        Ok(())
    }
}

fn channel_spectrum(features: &FeatureMap, l: usize) -> Array2<Complex64> {
    let channel = features.cells.slice(s![.., .., l]).to_owned();
    fft2(&channel)
}

/// Trains a fresh filter on one feature map.
///
/// Per channel, `A^l = conj(G) .* F^l`; the denominator is
/// `B = sum_k conj(F^k) .* F^k`, which is real and nonnegative.
pub fn train_initial(
    features: &FeatureMap,
    label: &DesiredOutput,
    lambda: f64,
    eta: f64,
) -> Result<FilterModel> {
    if lambda < 0.0 {
        return Err(Error::InvalidConfig("lambda must be >= 0".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidConfig("eta must be in [0, 1]".into()));
    }
    if features.spatial_dim() != label.shape() {
        return Err(Error::ShapeMismatch {
            expected: (label.shape().0, label.shape().1, features.channels()),
            actual: features.cells.dim(),
        });
    }
    let g_hat = fft2(&label.g);
    let (rows, cols) = label.shape();
    let mut a = Vec::with_capacity(features.channels());
    let mut b = Array2::<f64>::zeros((rows, cols));
    for l in 0..features.channels() {
        let f_hat = channel_spectrum(features, l);
        for (acc, v) in b.iter_mut().zip(f_hat.iter()) {
            *acc += v.norm_sqr();
        }
        a.push(Array2::from_shape_fn((rows, cols), |(r, c)| {
            g_hat[[r, c]].conj() * f_hat[[r, c]]
        }));
    }
    Ok(FilterModel {
        a,
        b,
        lambda,
        eta,
        label: label.clone(),
        g_hat,
        template_size: (
            features.rows() * features.cell_size,
            features.cols() * features.cell_size,
        ),
    })
}

/// Blends a new feature map into the filter:
/// `A_t = (1 - eta) A_{t-1} + eta conj(G) F_t` and likewise for `B`.
pub fn update(model: &FilterModel, features: &FeatureMap) -> Result<FilterModel> {
    model.check_shape(features)?;
    let eta = model.eta;
    let mut out = model.clone();
    let mut b_new = Array2::<f64>::zeros(model.b.dim());
    for l in 0..model.channels() {
        let f_hat = channel_spectrum(features, l);
        for (acc, v) in b_new.iter_mut().zip(f_hat.iter()) {
            *acc += v.norm_sqr();
        }
        let (rows, cols) = model.spatial_dim();
        for r in 0..rows {
            for c in 0..cols {
                out.a[l][[r, c]] = model.a[l][[r, c]] * (1.0 - eta)
                    + model.g_hat[[r, c]].conj() * f_hat[[r, c]] * eta;
            }
        }
    }
    for (dst, (&old, &new)) in out.b.iter_mut().zip(model.b.iter().zip(b_new.iter())) {
        *dst = old * (1.0 - eta) + new * eta;
    }
    Ok(out)
}

/// Scores a feature map against the filter: the inverse DFT of
/// `sum_l conj(A^l) .* Z^l / (B + lambda)`.
///
/// The result is real up to numerical noise; the imaginary residue is
/// asserted below [`IMAG_TOLERANCE`] and discarded. Errors if `lambda`
/// is zero and the denominator has an exact zero bin.
pub fn respond(model: &FilterModel, features: &FeatureMap) -> Result<Array2<f64>> {
    model.check_shape(features)?;
    if model.lambda == 0.0 && model.b.iter().any(|&v| v == 0.0) {
        return Err(Error::SingularDenominator);
    }
    let (rows, cols) = model.spatial_dim();
    let mut num = Array2::<Complex64>::default((rows, cols));
    for l in 0..model.channels() {
        let z_hat = channel_spectrum(features, l);
        for (acc, (a, z)) in num.iter_mut().zip(model.a[l].iter().zip(z_hat.iter())) {
            *acc += a.conj() * z;
        }
    }
    for (v, &b) in num.iter_mut().zip(model.b.iter()) {
        *v /= Complex64::new(b + model.lambda, 0.0);
    }
    let y = ifft2(&num);
    let max_imag = y.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    assert!(
        max_imag < IMAG_TOLERANCE,
        "response spectrum lost conjugate symmetry (imag {max_imag})"
    );
    Ok(y.mapv(|v| v.re))
}

/// Position and value of the response maximum; ties resolve to the
/// smallest row-major index.
pub fn locate(y: &Array2<f64>) -> ((usize, usize), f64) {
    assert!(!y.is_empty());
    let mut best = ((0usize, 0usize), f64::NEG_INFINITY);
    for (idx, &v) in y.indexed_iter() {
        if v > best.1 {
            best = (idx, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_features(seed: u64, rows: usize, cols: usize, d: usize) -> FeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMap::from_cells(
            Array3::from_shape_fn((rows, cols, d), |_| rng.random_range(-1.0..1.0)),
            4,
        )
    }

    #[test]
    fn label_peak_is_one_at_center() {
        for shape in [(8, 8), (7, 5), (1, 1), (2, 9)] {
            let label = make_label(shape, 1.0 / 16.0);
            let (cr, cc) = label.center();
            assert_eq!(label.g[[cr, cc]], 1.0);
            let ((mr, mc), mv) = locate(&label.g);
            assert_eq!((mr, mc), (cr, cc));
            assert_eq!(mv, 1.0);
        }
    }

    #[test]
    fn label_is_centrally_symmetric() {
        let label = make_label((16, 16), 0.1);
        let (cr, cc) = label.center();
        assert_eq!(label.g[[cr + 2, cc + 3]], label.g[[cr - 2, cc - 3]]);
        assert_eq!(label.g[[cr + 1, cc - 4]], label.g[[cr - 1, cc + 4]]);
    }

    #[test]
    fn label_impulse_limit() {
        let label = make_label((9, 9), 1e-12);
        let (cr, cc) = label.center();
        for ((r, c), &v) in label.g.indexed_iter() {
            if (r, c) == (cr, cc) {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn train_on_zero_features_gives_zero_model() {
        let features = FeatureMap::from_cells(Array3::zeros((6, 6, 2)), 4);
        let label = make_label((6, 6), 0.1);
        let model = train_initial(&features, &label, 0.01, 0.025).unwrap();
        assert!(model.numerators().iter().all(|a| a.iter().all(|v| v.norm() == 0.0)));
        assert!(model.denominator().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn training_patch_reproduces_label_single_channel_no_regularizer() {
        let features = random_features(21, 12, 12, 1);
        let label = make_label((12, 12), 1.0 / 16.0);
        let model = train_initial(&features, &label, 0.0, 0.025).unwrap();
        let y = respond(&model, &features).unwrap();
        for (a, b) in y.iter().zip(label.g.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn respond_zero_patch_gives_zero_response() {
        let features = random_features(22, 8, 8, 2);
        let label = make_label((8, 8), 1.0 / 16.0);
        let model = train_initial(&features, &label, 0.01, 0.025).unwrap();
        let zero = FeatureMap::from_cells(Array3::zeros((8, 8, 2)), 4);
        let y = respond(&model, &zero).unwrap();
        assert!(y.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn respond_errors_on_singular_denominator() {
        let zeros = FeatureMap::from_cells(Array3::zeros((4, 4, 1)), 4);
        let label = make_label((4, 4), 0.1);
        let model = train_initial(&zeros, &label, 0.0, 0.0).unwrap();
        assert!(matches!(
            respond(&model, &zeros),
            Err(Error::SingularDenominator)
        ));
    }

    #[test]
    fn update_with_full_rate_equals_fresh_training() {
        let first = random_features(23, 8, 8, 3);
        let second = random_features(24, 8, 8, 3);
        let label = make_label((8, 8), 1.0 / 16.0);
        let model = train_initial(&first, &label, 0.01, 1.0).unwrap();
        let updated = update(&model, &second).unwrap();
        let fresh = train_initial(&second, &label, 0.01, 1.0).unwrap();
        for l in 0..3 {
            for (a, b) in updated.a[l].iter().zip(fresh.a[l].iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        for (a, b) in updated.b.iter().zip(fresh.b.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_with_zero_rate_is_identity() {
        let first = random_features(25, 8, 8, 2);
        let second = random_features(26, 8, 8, 2);
        let label = make_label((8, 8), 1.0 / 16.0);
        let model = train_initial(&first, &label, 0.01, 0.0).unwrap();
        let updated = update(&model, &second).unwrap();
        for l in 0..2 {
            for (a, b) in updated.a[l].iter().zip(model.a[l].iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        for (a, b) in updated.b.iter().zip(model.b.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_identical_updates_reach_fixed_point() {
        let features = random_features(27, 8, 8, 2);
        let label = make_label((8, 8), 1.0 / 16.0);
        let model = train_initial(&features, &label, 0.01, 0.37).unwrap();
        let once = update(&model, &features).unwrap();
        let twice = update(&once, &features).unwrap();
        for l in 0..2 {
            for (a, b) in twice.a[l].iter().zip(once.a[l].iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        for (a, b) in twice.b.iter().zip(once.b.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn denominator_stays_nonnegative_under_update_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let label = make_label((6, 6), 1.0 / 16.0);
        let mut model =
            train_initial(&random_features(29, 6, 6, 2), &label, 0.01, 0.3).unwrap();
        for seed in 0..20 {
            let f = random_features(100 + seed, 6, 6, 2);
            model = update(&model, &f).unwrap();
            assert!(model.b.iter().all(|&v| v >= 0.0));
            let _ = rng.random::<f64>();
        }
    }

    #[test]
    fn locate_single_peak_and_tie_break() {
        let mut y = Array2::zeros((6, 8));
        y[[3, 5]] = 1.0;
        assert_eq!(locate(&y), ((3, 5), 1.0));
        let flat = Array2::from_elem((4, 4), 0.25);
        assert_eq!(locate(&flat), ((0, 0), 0.25));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let features = random_features(30, 8, 8, 2);
        let label = make_label((8, 8), 0.1);
        let model = train_initial(&features, &label, 0.01, 0.025).unwrap();
        let wrong = random_features(31, 8, 8, 3);
        assert!(matches!(
            respond(&model, &wrong),
            Err(Error::ShapeMismatch { .. })
        ));
        let wrong_spatial = random_features(32, 6, 8, 2);
        assert!(matches!(
            update(&model, &wrong_spatial),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(train_initial(&wrong_spatial, &label, 0.01, 0.025).is_err());
    }
}
