//! Filter math checked against independent oracles: a direct O(n^2) DFT
//! for the trained quantities, spatial circular convolution for the
//! response path, and a Jacobi eigensolver for PCA variance capture.

mod common;

use common::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tandem::features::{pca_fit, FeatureMap};
use tandem::filter::{locate, make_label, respond, train_initial};

#[test]
fn trained_quantities_match_naive_dft_evaluation() {
    let features = random_features(41, 8, 8, 2);
    let label = make_label((8, 8), 1.0 / 16.0);
    let model = train_initial(&features, &label, 0.01, 0.025).unwrap();
    let (a_oracle, b_oracle) = oracle_train(&features, &label);
    for l in 0..2 {
        for (fast, slow) in model.numerators()[l].iter().zip(a_oracle[l].iter()) {
            assert!((fast - slow).norm() < 1e-8);
        }
    }
    for (fast, slow) in model.denominator().iter().zip(b_oracle.iter()) {
        assert!((fast - slow).abs() < 1e-8);
    }
}

#[test]
fn respond_matches_spatial_circular_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..20 {
        let rows = rng.random_range(4..=12);
        let cols = rng.random_range(4..=12);
        let d = rng.random_range(1..=3);
        let lambda = [0.0, 0.01, 0.1][case % 3];
        let features = random_features(1000 + case as u64, rows, cols, d);
        let query = random_features(2000 + case as u64, rows, cols, d);
        let label = make_label((rows, cols), 1.0 / 16.0);
        let model = train_initial(&features, &label, lambda, 0.025).unwrap();
        let fast = respond(&model, &query).unwrap();
        let (a, b) = oracle_train(&features, &label);
        let slow = oracle_respond(&a, &b, lambda, &query);
        for (x, y) in fast.iter().zip(slow.iter()) {
            assert!(
                (x - y).abs() < 1e-6,
                "case {case} ({rows}x{cols}, d={d}, lambda={lambda}): {x} vs {y}"
            );
        }
    }
}

#[test]
fn response_peak_tracks_circular_shifts() {
    let features = random_features(43, 16, 16, 2);
    let label = make_label((16, 16), 1.0 / 16.0);
    let model = train_initial(&features, &label, 0.01, 0.025).unwrap();
    let base = respond(&model, &features).unwrap();
    let (base_peak, _) = locate(&base);
    for dr in -4i64..=4 {
        for dc in -4i64..=4 {
            let shifted = circular_shift(&features, dr, dc);
            let y = respond(&model, &shifted).unwrap();
            let (peak, _) = locate(&y);
            let want = (
                ((base_peak.0 as i64 + dr).rem_euclid(16)) as usize,
                ((base_peak.1 as i64 + dc).rem_euclid(16)) as usize,
            );
            assert_eq!(peak, want, "shift ({dr},{dc})");
        }
    }
}

#[test]
fn pca_captured_variance_equals_top_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    // Random data with an anisotropic spectrum so eigenvalues differ.
    let d = 8;
    let (rows, cols) = (10, 10);
    let gains: Vec<f64> = (0..d).map(|i| 0.2 + 1.7f64.powi(i as i32) * 0.1).collect();
    let cells = ndarray::Array3::from_shape_fn((rows, cols, d), |(_, _, i)| {
        gains[i] * rng.random_range(-1.0f64..1.0)
    });
    let map = FeatureMap::from_cells(cells, 4);

    // Sample covariance assembled independently.
    let n = (rows * cols) as f64;
    let mut mean = vec![0.0f64; d];
    for r in 0..rows {
        for c in 0..cols {
            for i in 0..d {
                mean[i] += map.cells[[r, c, i]] / n;
            }
        }
    }
    let mut cov = Array2::<f64>::zeros((d, d));
    for r in 0..rows {
        for c in 0..cols {
            for i in 0..d {
                for j in 0..d {
                    cov[[i, j]] += (map.cells[[r, c, i]] - mean[i])
                        * (map.cells[[r, c, j]] - mean[j])
                        / n;
                }
            }
        }
    }
    let eigs = jacobi_eigenvalues(&cov);

    for d_out in [1, 3, 5, 8] {
        let p = pca_fit(std::slice::from_ref(&map), d_out).unwrap();
        let projected = p.project(&map).unwrap();
        let captured: f64 = projected.cells.iter().map(|v| v * v).sum::<f64>() / n;
        let expected: f64 = eigs.iter().take(d_out).sum();
        assert!(
            (captured - expected).abs() < 1e-8,
            "d_out={d_out}: captured {captured} vs eigenvalue sum {expected}"
        );
    }
}
