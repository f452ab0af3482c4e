//! Thin 1-D/2-D DFT wrappers with cached plans.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Forward 2-D DFT of a real grid.
pub(crate) fn fft2(input: &Array2<f64>) -> Array2<Complex64> {
    let spec = input.mapv(|v| Complex64::new(v, 0.0));
    fft2_complex(spec, false)
}

/// Inverse 2-D DFT, normalized by `1/(rows*cols)`.
pub(crate) fn ifft2(input: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = fft2_complex(input.clone(), true);
    let scale = 1.0 / (input.nrows() * input.ncols()) as f64;
    out.mapv_inplace(|v| v * scale);
    out
}

fn fft2_complex(mut grid: Array2<Complex64>, inverse: bool) -> Array2<Complex64> {
    let (rows, cols) = grid.dim();
    let plan_of = |n: usize| if inverse { inverse_plan(n) } else { forward_plan(n) };

    let row_plan = plan_of(cols);
    for mut row in grid.rows_mut() {
        let slice = row.as_slice_mut().expect("row-major layout");
        row_plan.process(slice);
    }

    let col_plan = plan_of(rows);
    let mut scratch = vec![Complex64::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            scratch[r] = grid[[r, c]];
        }
        col_plan.process(&mut scratch);
        for r in 0..rows {
            grid[[r, c]] = scratch[r];
        }
    }
    grid
}

/// Forward 1-D DFT of a real signal.
pub(crate) fn fft1(input: &Array1<f64>) -> Array1<Complex64> {
    let mut buf: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_plan(buf.len()).process(&mut buf);
    Array1::from_vec(buf)
}

/// Inverse 1-D DFT, normalized by `1/n`.
pub(crate) fn ifft1(input: &Array1<Complex64>) -> Array1<Complex64> {
    let mut buf: Vec<Complex64> = input.to_vec();
    inverse_plan(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    Array1::from_vec(buf.into_iter().map(|v| v * scale).collect())
}
