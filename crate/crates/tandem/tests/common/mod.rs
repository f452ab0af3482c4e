//! Independent oracles and fixtures shared by the integration tests.
//!
//! Everything here recomputes results from definitions: direct O(n^2)
//! DFT sums, spatial circular convolution by quadruple loop, and a
//! cyclic Jacobi eigensolver. None of it touches the library's FFT or
//! linear-algebra paths, so agreement is meaningful.

#![allow(dead_code)]

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tandem::features::FeatureMap;
use tandem::filter::DesiredOutput;

/// Direct forward 2-D DFT by explicit double sum.
pub fn naive_dft2(x: &Array2<f64>) -> Array2<Complex64> {
    let (rows, cols) = x.dim();
    Array2::from_shape_fn((rows, cols), |(u, v)| {
        let mut acc = Complex64::default();
        for r in 0..rows {
            for c in 0..cols {
                let ang = -2.0 * std::f64::consts::PI
                    * (u as f64 * r as f64 / rows as f64 + v as f64 * c as f64 / cols as f64);
                acc += Complex64::new(x[[r, c]], 0.0) * Complex64::new(ang.cos(), ang.sin());
            }
        }
        acc
    })
}

/// Direct inverse 2-D DFT by explicit double sum.
pub fn naive_idft2(x: &Array2<Complex64>) -> Array2<Complex64> {
    let (rows, cols) = x.dim();
    let scale = 1.0 / (rows * cols) as f64;
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let mut acc = Complex64::default();
        for u in 0..rows {
            for v in 0..cols {
                let ang = 2.0 * std::f64::consts::PI
                    * (u as f64 * r as f64 / rows as f64 + v as f64 * c as f64 / cols as f64);
                acc += x[[u, v]] * Complex64::new(ang.cos(), ang.sin());
            }
        }
        acc * scale
    })
}

/// Spatial circular convolution of a complex kernel with a real signal.
pub fn circular_convolve2(kernel: &Array2<Complex64>, signal: &Array2<f64>) -> Array2<Complex64> {
    let (rows, cols) = kernel.dim();
    assert_eq!(signal.dim(), (rows, cols));
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let mut acc = Complex64::default();
        for i in 0..rows {
            for j in 0..cols {
                let sr = (r + rows - i) % rows;
                let sc = (c + cols - j) % cols;
                acc += kernel[[i, j]] * signal[[sr, sc]];
            }
        }
        acc
    })
}

/// Per-frequency model quantities computed entirely with the naive DFT:
/// numerators `A^l = conj(G) F^l` and denominator `B = sum |F^l|^2`.
pub fn oracle_train(
    features: &FeatureMap,
    label: &DesiredOutput,
) -> (Vec<Array2<Complex64>>, Array2<f64>) {
    let (rows, cols) = label.shape();
    let g_hat = naive_dft2(&label.g);
    let mut a = Vec::new();
    let mut b = Array2::<f64>::zeros((rows, cols));
    for l in 0..features.channels() {
        let channel = channel_of(features, l);
        let f_hat = naive_dft2(&channel);
        for (acc, v) in b.iter_mut().zip(f_hat.iter()) {
            *acc += v.norm_sqr();
        }
        a.push(Array2::from_shape_fn((rows, cols), |(u, v)| {
            g_hat[[u, v]].conj() * f_hat[[u, v]]
        }));
    }
    (a, b)
}

/// Response computed the spatial way: per channel, the frequency weights
/// `conj(A^l) / (B + lambda)` are brought to the spatial domain with the
/// naive inverse DFT and circularly convolved with the query channel.
pub fn oracle_respond(
    a: &[Array2<Complex64>],
    b: &Array2<f64>,
    lambda: f64,
    query: &FeatureMap,
) -> Array2<f64> {
    let (rows, cols) = b.dim();
    let mut y = Array2::<Complex64>::default((rows, cols));
    for (l, a_l) in a.iter().enumerate() {
        let weights = Array2::from_shape_fn((rows, cols), |(u, v)| {
            a_l[[u, v]].conj() / Complex64::new(b[[u, v]] + lambda, 0.0)
        });
        let kernel = naive_idft2(&weights);
        let z = channel_of(query, l);
        let conv = circular_convolve2(&kernel, &z);
        for (acc, v) in y.iter_mut().zip(conv.iter()) {
            *acc += v;
        }
    }
    let max_imag = y.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    assert!(max_imag < 1e-8, "oracle response not real: {max_imag}");
    y.mapv(|v| v.re)
}

pub fn channel_of(map: &FeatureMap, l: usize) -> Array2<f64> {
    Array2::from_shape_fn((map.rows(), map.cols()), |(r, c)| map.cells[[r, c, l]])
}

/// Circularly shifts every channel by `(dr, dc)`.
pub fn circular_shift(map: &FeatureMap, dr: i64, dc: i64) -> FeatureMap {
    let (rows, cols, d) = map.cells.dim();
    let cells = Array3::from_shape_fn((rows, cols, d), |(r, c, l)| {
        let sr = ((r as i64 - dr).rem_euclid(rows as i64)) as usize;
        let sc = ((c as i64 - dc).rem_euclid(cols as i64)) as usize;
        map.cells[[sr, sc, l]]
    });
    FeatureMap::from_cells(cells, map.cell_size)
}

pub fn random_features(seed: u64, rows: usize, cols: usize, d: usize) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::from_cells(
        Array3::from_shape_fn((rows, cols, d), |_| rng.random_range(-1.0..1.0)),
        4,
    )
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// descending.
pub fn jacobi_eigenvalues(matrix: &Array2<f64>) -> Vec<f64> {
    let n = matrix.nrows();
    assert_eq!(matrix.ncols(), n);
    let mut m = matrix.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-18 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs
}

/// Moving textured square over a quiet background: the standard scene
/// for engine-level tests.
pub fn synthetic_scene(n: usize) -> (Vec<tandem::Frame>, Vec<tandem::BoundingBox>) {
    let spec = tandem::bench::SynthSpec {
        frames: n,
        noise: 0.01,
        ..tandem::bench::SynthSpec::default()
    };
    let seq = tandem::bench::generate_synthetic(&spec).unwrap();
    (seq.frames, seq.ground_truth)
}

/// Bitwise equality of box lists.
pub fn boxes_identical(a: &[tandem::BoundingBox], b: &[tandem::BoundingBox]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(x, y)| {
            x.x.to_bits() == y.x.to_bits()
                && x.y.to_bits() == y.y.to_bits()
                && x.w.to_bits() == y.w.to_bits()
                && x.h.to_bits() == y.h.to_bits()
        })
}
