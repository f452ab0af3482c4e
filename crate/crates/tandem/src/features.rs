//! Patch features: cell-averaged intensity plus orientation-binned
//! gradient histograms, with an optional PCA compression stage.
//!
//! A patch is divided into square cells. Channel 0 carries the per-cell
//! mean intensity centered to zero mean over the map; channels `1..d`
//! carry a 9-bin unsigned gradient histogram per cell, L2-normalized
//! within the cell. PCA is fitted once (on the first frame's target
//! patch) and applied per cell vector.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};

/// Number of unsigned orientation bins over `[0, 180)` degrees.
pub const ORIENTATION_BINS: usize = 9;

/// Total channels produced by [`extract_features`].
pub const RAW_CHANNELS: usize = 1 + ORIENTATION_BINS;

const NORM_EPS: f64 = 1e-5;

/// Cell-grid feature map: `rows x cols x d` real values.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub cells: Array3<f64>,
    pub cell_size: usize,
}

impl FeatureMap {
    pub fn from_cells(cells: Array3<f64>, cell_size: usize) -> Self {
        debug_assert!(cells.iter().all(|v| v.is_finite()));
        Self { cells, cell_size }
    }

    pub fn rows(&self) -> usize {
        self.cells.dim().0
    }

    pub fn cols(&self) -> usize {
        self.cells.dim().1
    }

    /// Channel count.
    pub fn channels(&self) -> usize {
        self.cells.dim().2
    }

    pub fn spatial_dim(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }
}

/// Converts a pixel patch into a cell-grid feature map.
///
/// The map has `floor(h/cell_size) x floor(w/cell_size)` cells; trailing
/// pixels that do not fill a cell are ignored. Errors if the patch is
/// smaller than a single cell.
pub fn extract_features(patch: &Array2<f64>, cell_size: usize) -> Result<FeatureMap> {
    assert!(cell_size >= 1);
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

    let mut cells = Array3::zeros((rows, cols, RAW_CHANNELS));
    let mut intensity_sum = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let mut hist = [0.0f64; ORIENTATION_BINS];
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
                        let bin = ((angle / (std::f64::consts::PI / ORIENTATION_BINS as f64))
                            .floor() as usize)
                            .min(ORIENTATION_BINS - 1);
                        hist[bin] += mag;
                    }
                }
            }
            mean /= (cell_size * cell_size) as f64;
            intensity_sum += mean;
            cells[[r, c, 0]] = mean;
            let norm = hist.iter().map(|v| v * v).sum::<f64>() + NORM_EPS * NORM_EPS;
            let norm = norm.sqrt();
            for (b, &v) in hist.iter().enumerate() {
                cells[[r, c, 1 + b]] = v / norm;
            }
        }
    }

    // Center the intensity channel to zero mean over the map.
    let intensity_mean = intensity_sum / (rows * cols) as f64;
    for r in 0..rows {
        for c in 0..cols {
            cells[[r, c, 0]] -= intensity_mean;
        }
    }

    Ok(FeatureMap::from_cells(cells, cell_size))
}

/// One-dimensional Hann taper with zero endpoints (single-point windows
/// are the identity).
pub fn hann(n: usize) -> Array1<f64> {
    if n == 1 {
        return Array1::ones(1);
    }
    Array1::from_shape_fn(n, |i| {
        0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n as f64 - 1.0)).cos())
    })
}

/// Multiplies every channel by a separable 2-D Hann window.
pub fn apply_hann_window(map: &FeatureMap) -> FeatureMap {
    let (rows, cols, d) = map.cells.dim();
    let wr = hann(rows);
    let wc = hann(cols);
    let mut cells = map.cells.clone();
    for r in 0..rows {
        for c in 0..cols {
            let w = wr[r] * wc[c];
            for l in 0..d {
                cells[[r, c, l]] *= w;
            }
        }
    }
    FeatureMap::from_cells(cells, map.cell_size)
}

/// Orthonormal linear projector fitted by PCA over per-cell vectors.
#[derive(Debug, Clone)]
pub struct PcaProjector {
    /// `d_in x d_out` matrix with orthonormal columns.
    pub basis: Array2<f64>,
    pub mean: Array1<f64>,
}

impl PcaProjector {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Maps each cell vector to `B^T (v - mean)`.
    pub fn project(&self, map: &FeatureMap) -> Result<FeatureMap> {
        let (rows, cols, d) = map.cells.dim();
        if d != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols, self.input_dim()),
                actual: (rows, cols, d),
            });
        }
        let d_out = self.output_dim();
        let mut cells = Array3::zeros((rows, cols, d_out));
        for r in 0..rows {
            for c in 0..cols {
                for j in 0..d_out {
                    let mut acc = 0.0;
                    for i in 0..d {
                        acc += self.basis[[i, j]] * (map.cells[[r, c, i]] - self.mean[i]);
                    }
                    cells[[r, c, j]] = acc;
                }
            }
        }
        Ok(FeatureMap::from_cells(cells, map.cell_size))
    }

    /// Maps projected cell vectors back to the input space, `B y + mean`.
    pub fn back_project(&self, map: &FeatureMap) -> Result<FeatureMap> {
        let (rows, cols, d) = map.cells.dim();
        if d != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: (rows, cols, self.output_dim()),
                actual: (rows, cols, d),
            });
        }
        let d_in = self.input_dim();
        let mut cells = Array3::zeros((rows, cols, d_in));
        for r in 0..rows {
            for c in 0..cols {
                for i in 0..d_in {
                    let mut acc = self.mean[i];
                    for j in 0..self.output_dim() {
                        acc += self.basis[[i, j]] * map.cells[[r, c, j]];
                    }
                    cells[[r, c, i]] = acc;
                }
            }
        }
        Ok(FeatureMap::from_cells(cells, map.cell_size))
    }
}

/// Fits a PCA projector on the per-cell vectors pooled over `samples`.
///
/// The basis spans the `d_out` directions of largest variance. Errors if
/// no samples are given, channel counts disagree, or `d_out` exceeds the
/// channel count.
pub fn pca_fit(samples: &[FeatureMap], d_out: usize) -> Result<PcaProjector> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidConfig("pca_fit needs at least one sample".into()))?;
    let d = first.channels();
    if d_out == 0 || d_out > d {
        return Err(Error::InvalidConfig(format!(
            "pca output dimension {d_out} not in 1..={d}"
        )));
    }

    let mut count = 0usize;
    let mut mean = Array1::<f64>::zeros(d);
    for map in samples {
        if map.channels() != d {
            return Err(Error::ShapeMismatch {
                expected: (map.rows(), map.cols(), d),
                actual: map.cells.dim(),
            });
        }
        for r in 0..map.rows() {
            for c in 0..map.cols() {
                for i in 0..d {
                    mean[i] += map.cells[[r, c, i]];
                }
                count += 1;
            }
        }
    }
    mean.mapv_inplace(|v| v / count as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for map in samples {
        for r in 0..map.rows() {
            for c in 0..map.cols() {
                for i in 0..d {
                    let vi = map.cells[[r, c, i]] - mean[i];
                    for j in i..d {
                        let vj = map.cells[[r, c, j]] - mean[j];
                        cov[(i, j)] += vi * vj;
                    }
                }
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= count as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut basis = Array2::zeros((d, d_out));
    for (j, &k) in order.iter().take(d_out).enumerate() {
        for i in 0..d {
            basis[[i, j]] = eig.eigenvectors[(i, k)];
        }
    }
    Ok(PcaProjector { basis, mean })
}
