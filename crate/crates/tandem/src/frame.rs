//! Single-channel image frames and patch extraction.
//!
//! Frames hold luminance values in `[0, 1]`. Color input is collapsed to
//! luminance at ingestion (`0.299 R + 0.587 G + 0.114 B`); all downstream
//! math is single-channel. Patch crops pad out-of-frame pixels by
//! replicating the nearest border pixel.

use ndarray::Array2;

/// One video frame: an ordinal index plus a grid of luminance values.
#[derive(Debug, Clone)]
pub struct Frame {
    pub index: usize,
    pub pixels: Array2<f64>,
}

impl Frame {
    /// Wraps a pixel grid. Values are expected in `[0, 1]`; `width` and
    /// `height` must be at least 1.
    pub fn new(index: usize, pixels: Array2<f64>) -> Self {
        assert!(pixels.nrows() >= 1 && pixels.ncols() >= 1);
        debug_assert!(pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        Self { index, pixels }
    }

    /// Builds a frame from interleaved 8-bit RGB data.
    pub fn from_rgb8(index: usize, width: usize, height: usize, rgb: &[u8]) -> Self {
        assert_eq!(rgb.len(), width * height * 3);
        let mut pixels = Array2::zeros((height, width));
        for y in 0..height {
            for x in 0..width {
                let i = (y * width + x) * 3;
                let lum = 0.299 * f64::from(rgb[i])
                    + 0.587 * f64::from(rgb[i + 1])
                    + 0.114 * f64::from(rgb[i + 2]);
                pixels[[y, x]] = (lum / 255.0).clamp(0.0, 1.0);
            }
        }
        Self::new(index, pixels)
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    /// Pixel value with replicate-border semantics for out-of-range indices.
    pub fn pixel_clamped(&self, y: i64, x: i64) -> f64 {
        let yy = y.clamp(0, self.height() as i64 - 1) as usize;
        let xx = x.clamp(0, self.width() as i64 - 1) as usize;
        self.pixels[[yy, xx]]
    }
}

/// Rounds half-up: ties go toward positive infinity.
pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Extracts a `size`-sized patch centered at `center` from the frame.
///
/// Sizes are rounded half-up to integers (and clamped to at least 1).
/// Pixels outside the frame are filled by replicating the nearest border
/// pixel, so any center is valid.
pub fn crop_patch(frame: &Frame, center: (f64, f64), size: (f64, f64)) -> Array2<f64> {
    let w = (round_half_up(size.0) as i64).max(1);
    let h = (round_half_up(size.1) as i64).max(1);
    let x0 = round_half_up(center.0 - w as f64 / 2.0) as i64;
    let y0 = round_half_up(center.1 - h as f64 / 2.0) as i64;
    let mut out = Array2::zeros((h as usize, w as usize));
    for dy in 0..h {
        for dx in 0..w {
            out[[dy as usize, dx as usize]] = frame.pixel_clamped(y0 + dy, x0 + dx);
        }
    }
    out
}

/// Resizes a grid to `(rows, cols)` with bilinear interpolation.
///
/// Sample positions map the output pixel centers onto the input pixel
/// centers; source coordinates are clamped at the borders.
pub fn resize_bilinear(src: &Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    assert!(rows >= 1 && cols >= 1);
    let (sr, sc) = (src.nrows(), src.ncols());
    if (sr, sc) == (rows, cols) {
        return src.clone();
    }
    let mut out = Array2::zeros((rows, cols));
    let ry = sr as f64 / rows as f64;
    let rx = sc as f64 / cols as f64;
    for r in 0..rows {
        let sy = ((r as f64 + 0.5) * ry - 0.5).clamp(0.0, (sr - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(sr - 1);
        let fy = sy - y0 as f64;
        for c in 0..cols {
            let sx = ((c as f64 + 0.5) * rx - 0.5).clamp(0.0, (sc - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(sc - 1);
            let fx = sx - x0 as f64;
            let top = src[[y0, x0]] * (1.0 - fx) + src[[y0, x1]] * fx;
            let bot = src[[y1, x0]] * (1.0 - fx) + src[[y1, x1]] * fx;
            out[[r, c]] = top * (1.0 - fy) + bot * fy;
        }
    }
    out
}
