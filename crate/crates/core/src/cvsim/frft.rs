use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{Arc, Mutex, OnceLock};

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{CenteredDft, Grid, GridState};
use crate::error::{Error, Result};

/// Splits the Fourier-sector degeneracies of the discrete oscillator.
/// The perturbation commutes with it, so only the choice of basis inside a
/// degenerate eigenspace changes.
const SECTOR_SPLIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrftMethod {
    /// Diagonalizes the discrete oscillator; exact group law on the grid.
    #[default]
    Spectral,
    /// Chirp, Fourier-shear, chirp, in steps of at most a quarter turn of pi.
    Chirp,
}

/// Rotates `state` by `angle` radians in phase space.
pub fn frft(state: &GridState, angle: f64) -> Result<GridState> {
    frft_with(state, angle, FrftMethod::Spectral)
}

pub fn frft_with(state: &GridState, angle: f64, method: FrftMethod) -> Result<GridState> {
    if !angle.is_finite() {
        return Err(Error::Domain(format!("rotation angle {angle} is not finite")));
    }
    let theta = reduce_angle(angle);
    if theta == 0.0 {
        return Ok(state.clone());
    }
    match method {
        FrftMethod::Spectral => Ok(OscillatorBasis::cached(state.grid())?.rotate(state, theta)),
        FrftMethod::Chirp => Ok(chirp_rotate(state, theta)),
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn reduce_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Eigenvectors of `H = (Q^2 + P^2) / 2` on a symmetric grid, where
/// `P^2 = F^dagger Q^2 F` uses the grid Fourier transform `F`.
///
/// `H` commutes with `F` and with parity, so it splits into an even and an odd
/// block of half size. Each eigenvector carries a Fourier eigenvalue
/// `(-i)^l`; `l` is the integer nearest its energy rank with that residue.
/// The rotation by `theta` is then `sum_l exp(-i l theta) |v_l><v_l|`, which
/// is unitary and additive to rounding error and equals `F` at `pi / 2`.
#[derive(Debug)]
pub struct OscillatorBasis {
    grid: Grid,
    even: Mat<f64>,
    odd: Mat<f64>,
    even_labels: Vec<f64>,
    odd_labels: Vec<f64>,
}

impl OscillatorBasis {
    pub fn new(grid: Grid) -> Result<Self> {
        let n = grid.len();
        let half = n / 2;
        let dq = grid.spacing();
        let xs: Vec<f64> = (0..half).map(|a| (a as f64 + 0.5) * dq).collect();
        let g: Vec<f64> = (0..n)
            .map(|k| {
                let phase = 2.0 * PI * k as f64 / n as f64;
                xs.iter().enumerate().map(|(b, x)| x * x * (phase * (b as f64 + 0.5)).cos()).sum::<f64>() * 2.0
                    / n as f64
            })
            .collect();
        let scale = 2.0 / (n as f64).sqrt();
        let block = |sign: f64, split: &dyn Fn(f64) -> f64| {
            Mat::from_fn(half, half, |a, b| {
                let mut h = 0.5 * (g[a.abs_diff(b)] + sign * g[a + b + 1]);
                if a == b {
                    h += 0.5 * xs[a] * xs[a];
                }
                h + SECTOR_SPLIT * scale * split(xs[a] * xs[b])
            })
        };
        let (even, even_energy) = eigen(block(1.0, &f64::cos))?;
        let (odd, odd_energy) = eigen(block(-1.0, &f64::sin))?;

        let dft = CenteredDft::new(n);
        let mut levels: Vec<(f64, bool, usize, usize)> = Vec::with_capacity(n);
        for (parity, vecs, energies) in [(true, &even, &even_energy), (false, &odd, &odd_energy)] {
            for (i, &e) in energies.iter().enumerate() {
                let residue = fourier_residue(&dft, vecs.as_ref(), i, parity)?;
                levels.push((e, parity, i, residue));
            }
        }
        levels.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut even_labels = vec![0.0; half];
        let mut odd_labels = vec![0.0; half];
        for (rank, &(_, parity, i, residue)) in levels.iter().enumerate() {
            // rank - offset and rank + 4 - offset are the candidates with the right residue
            let offset = (rank + 4 - residue) % 4;
            let label = if offset <= 2 && rank >= offset { rank - offset } else { rank + 4 - offset };
            let slot = if parity { &mut even_labels[i] } else { &mut odd_labels[i] };
            *slot = label as f64;
        }
        Ok(Self { grid, even, odd, even_labels, odd_labels })
    }

    /// Shared basis for `grid`, built on first use.
    pub fn cached(grid: Grid) -> Result<Arc<Self>> {
        static BASES: OnceLock<Mutex<HashMap<usize, Arc<OscillatorBasis>>>> = OnceLock::new();
        let mut bases = BASES.get_or_init(Default::default).lock().unwrap_or_else(|p| p.into_inner());
        if let Some(b) = bases.get(&grid.len()) {
            return Ok(Arc::clone(b));
        }
        let basis = Arc::new(Self::new(grid)?);
        bases.insert(grid.len(), Arc::clone(&basis));
        Ok(basis)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Hermite-like mode numbers, even block first.
    pub fn labels(&self) -> impl Iterator<Item = u64> + '_ {
        self.even_labels.iter().chain(&self.odd_labels).map(|&l| l as u64)
    }

    pub fn rotate(&self, state: &GridState, theta: f64) -> GridState {
        assert_eq!(state.grid(), self.grid, "basis built for another grid");
        let half = self.grid.len() / 2;
        let psi = state.amplitudes();
        let split = |sign: f64| {
            Mat::from_fn(half, 2, |a, c| {
                let v = (psi[half + a] + sign * psi[half - 1 - a]) * FRAC_1_SQRT_2;
                if c == 0 {
                    v.re
                } else {
                    v.im
                }
            })
        };
        let even = rotate_block(self.even.as_ref(), &self.even_labels, split(1.0).as_ref(), theta);
        let odd = rotate_block(self.odd.as_ref(), &self.odd_labels, split(-1.0).as_ref(), theta);
        let mut out = state.clone();
        let amps = out.amplitudes_mut();
        for a in 0..half {
            let e = Complex64::new(even[(a, 0)], even[(a, 1)]);
            let o = Complex64::new(odd[(a, 0)], odd[(a, 1)]);
            amps[half + a] = (e + o) * FRAC_1_SQRT_2;
            amps[half - 1 - a] = (e - o) * FRAC_1_SQRT_2;
        }
        out
    }
}

fn eigen(h: Mat<f64>) -> Result<(Mat<f64>, Vec<f64>)> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("oscillator eigensolver failed: {e:?}")))?;
    let energies = (0..h.nrows()).map(|i| evd.S()[i]).collect();
    Ok((evd.U().to_owned(), energies))
}

/// Residue `l mod 4` of the Fourier eigenvalue `(-i)^l` of a block eigenvector.
fn fourier_residue(dft: &CenteredDft, vecs: MatRef<'_, f64>, col: usize, even: bool) -> Result<usize> {
    let half = vecs.nrows();
    let sign = if even { 1.0 } else { -1.0 };
    let mut psi = vec![Complex64::default(); 2 * half];
    for a in 0..half {
        let v = vecs[(a, col)] * FRAC_1_SQRT_2;
        psi[half + a] = Complex64::new(v, 0.0);
        psi[half - 1 - a] = Complex64::new(sign * v, 0.0);
    }
    let mut image = psi.clone();
    dft.forward(&mut image);
    let lambda: Complex64 = psi.iter().zip(&image).map(|(a, b)| a.conj() * b).sum();
    if lambda.norm() < 0.5 {
        return Err(Error::Numerical(format!("oscillator eigenvector {col} mixes Fourier sectors")));
    }
    Ok(((lambda.arg() / -FRAC_PI_2).round() as i64).rem_euclid(4) as usize)
}

fn rotate_block(vecs: MatRef<'_, f64>, labels: &[f64], x: MatRef<'_, f64>, theta: f64) -> Mat<f64> {
    let mut coef = vecs.transpose() * x;
    for (i, &l) in labels.iter().enumerate() {
        let c = Complex64::new(coef[(i, 0)], coef[(i, 1)]) * Complex64::from_polar(1.0, -l * theta);
        coef[(i, 0)] = c.re;
        coef[(i, 1)] = c.im;
    }
    vecs * coef.as_ref()
}

fn chirp_rotate(state: &GridState, theta: f64) -> GridState {
    let grid = state.grid();
    let steps = (theta.abs() / FRAC_PI_4).ceil().max(1.0);
    let step = theta / steps;
    let (t, s) = ((step / 2.0).tan(), step.sin());
    let chirp = |c: f64| -> Vec<Complex64> {
        grid.coordinates().map(|q| Complex64::from_polar(1.0, -0.5 * c * q * q)).collect()
    };
    let (cq, cp) = (chirp(t), chirp(s));
    let phase = Complex64::from_polar(1.0, step / 2.0);
    let dft = CenteredDft::new(grid.len());
    let mut out = state.clone();
    let psi = out.amplitudes_mut();
    for _ in 0..steps as usize {
        psi.iter_mut().zip(&cq).for_each(|(x, c)| *x *= c);
        dft.forward(psi);
        psi.iter_mut().zip(&cp).for_each(|(x, c)| *x *= c);
        dft.inverse(psi);
        psi.iter_mut().zip(&cq).for_each(|(x, c)| *x *= c * phase);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvsim::grid::{fourier_transform, gaussian_state};

    fn masked(grid: Grid) -> GridState {
        let g = gaussian_state(grid, 2.0, 0.3).unwrap();
        let amps = g
            .amplitudes()
            .iter()
            .zip(grid.coordinates())
            .map(|(a, q)| if (q * 1.3).rem_euclid(3.0) < 1.0 { *a } else { Complex64::default() })
            .collect();
        GridState::from_amplitudes(grid, amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn low_labels_follow_energy_order() {
        let basis = OscillatorBasis::new(Grid::new(256).unwrap()).unwrap();
        let mut labels: Vec<u64> = basis.labels().collect();
        labels.sort_unstable();
        assert_eq!(&labels[..60], &(0..60).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn quarter_turn_is_the_fourier_transform() {
        let grid = Grid::new(256).unwrap();
        let s = masked(grid);
        let err = frft(&s, FRAC_PI_2).unwrap().distance(&fourier_transform(&s));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn spectral_rotation_is_unitary_and_additive() {
        let grid = Grid::new(256).unwrap();
        let s = masked(grid);
        let a = frft(&s, 0.7).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let ab = frft(&a, 1.1).unwrap();
        assert!(ab.distance(&frft(&s, 1.8).unwrap()) < 1e-10);
        assert!(frft(&a, -0.7).unwrap().distance(&s) < 1e-10);
        assert!(frft(&s, 2.0 * PI).unwrap().distance(&s) < 1e-10);
    }

    #[test]
    fn half_turn_is_parity() {
        let grid = Grid::new(128).unwrap();
        let s = masked(grid);
        let r = frft(&s, PI).unwrap();
        let n = grid.len();
        for i in 0..n {
            assert!((r.amplitudes()[i] - s.amplitudes()[n - 1 - i]).norm() < 1e-10);
        }
    }

    #[test]
    fn engines_agree_on_smooth_states() {
        let grid = Grid::new(512).unwrap();
        let s = gaussian_state(grid, 1.7, 1.0).unwrap();
        for theta in [0.3, FRAC_PI_2, 2.2, -1.0, PI] {
            let a = frft_with(&s, theta, FrftMethod::Spectral).unwrap();
            let b = frft_with(&s, theta, FrftMethod::Chirp).unwrap();
            assert!(a.distance(&b) < 1e-9, "theta {theta}: {}", a.distance(&b));
        }
    }

    #[test]
    fn zero_angle_is_identity_and_nan_rejected() {
        let grid = Grid::new(64).unwrap();
        let s = gaussian_state(grid, 2.0, 0.0).unwrap();
        assert_eq!(frft(&s, 0.0).unwrap(), s);
        assert!(matches!(frft(&s, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn angle_reduction() {
        assert!((reduce_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((reduce_angle(-0.5) + 0.5).abs() < 1e-15);
        assert!((reduce_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }
}
