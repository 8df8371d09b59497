mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::hermite::{hermite_functions, rotate};
use num_complex::Complex64;
use pcg_mum::cvsim::{frft, frft_with, gaussian_state, FrftMethod, Grid, GridState, OscillatorBasis};

#[test]
fn hermite_functions_are_orthonormal() {
    let dx = 0.01;
    let table: Vec<Vec<f64>> = (-2000..=2000).map(|i| hermite_functions(i as f64 * dx, 12)).collect();
    for a in 0..12 {
        for b in 0..12 {
            let s: f64 = table.iter().map(|h| h[a] * h[b]).sum::<f64>() * dx;
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-10, "<h{a}|h{b}> = {s}");
        }
    }
}

#[test]
fn grid_eigenvectors_approximate_hermite_functions() {
    // a single Hermite function only picks up the phase exp(-i n theta)
    let grid = Grid::new(256).unwrap();
    for n in [0, 1, 5, 12, 30] {
        let h = GridState::from_fn(grid, |x| Complex64::new(hermite_functions(x, n + 1)[n], 0.0)).unwrap();
        let theta = 0.9;
        let rotated = frft(&h, theta).unwrap();
        let inner = h.inner(&rotated);
        let want = Complex64::from_polar(1.0, -(n as f64) * theta);
        assert!((inner - want).norm() < 1e-9, "n = {n}: {inner}");
    }
}

#[test]
fn spectral_engine_matches_oracle() {
    let grid = Grid::new(256).unwrap();
    let squeezed = GridState::from_fn(grid, |q| Complex64::from_polar((-(q * q) / 0.5).exp(), 0.3 * q))
        .unwrap()
        .normalized()
        .unwrap();
    for state in [gaussian_state(grid, 2.5, -2.0).unwrap(), squeezed] {
        for theta in [0.1, 1.0, FRAC_PI_2, 3.0, -PI] {
            let err = frft(&state, theta).unwrap().distance(&rotate(&state, theta, 150));
            assert!(err < 1e-8, "theta {theta}: {err:e}");
        }
    }
}

#[test]
fn chirp_engine_matches_oracle_on_smooth_states() {
    let grid = Grid::new(512).unwrap();
    let state = gaussian_state(grid, 1.2, 0.8).unwrap();
    for theta in [0.5, 1.4, 2.9] {
        let err = frft_with(&state, theta, FrftMethod::Chirp).unwrap().distance(&rotate(&state, theta, 120));
        assert!(err < 1e-8, "theta {theta}: {err:e}");
    }
}

#[test]
fn labels_cover_low_modes_once() {
    let basis = OscillatorBasis::cached(Grid::new(1024).unwrap()).unwrap();
    let mut labels: Vec<u64> = basis.labels().collect();
    labels.sort_unstable();
    assert!(labels.iter().take(300).enumerate().all(|(i, &l)| l == i as u64));
}
