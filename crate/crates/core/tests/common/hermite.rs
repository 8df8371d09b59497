//! Fractional Fourier transform through the continuous Hermite functions,
//! independent of the grid eigenbasis used by the library.

use num_complex::Complex64;
use pcg_mum::cvsim::{Grid, GridState};

/// Values of `h_0 .. h_{count-1}` at `x`, normalized on the real line.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(count);
    h.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count > 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for n in 1..count.saturating_sub(1) {
        let next = (2.0 / (n as f64 + 1.0)).sqrt() * x * h[n] - (n as f64 / (n as f64 + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h.truncate(count);
    h
}

/// Expands `state` in the first `modes` Hermite functions, multiplies mode
/// `n` by `exp(-i n theta)` and resums on the same grid.
pub fn rotate(state: &GridState, theta: f64, modes: usize) -> GridState {
    let grid: Grid = state.grid();
    let table: Vec<Vec<f64>> = grid.coordinates().map(|x| hermite_functions(x, modes)).collect();
    let dq = grid.spacing();
    let coef: Vec<Complex64> = (0..modes)
        .map(|n| table.iter().zip(state.amplitudes()).map(|(h, a)| a * h[n]).sum::<Complex64>() * dq)
        .collect();
    let amps = table
        .iter()
        .map(|h| {
            coef.iter()
                .enumerate()
                .map(|(n, c)| c * Complex64::from_polar(h[n], -(n as f64) * theta))
                .sum()
        })
        .collect();
    GridState::from_amplitudes(grid, amps).unwrap()
}
