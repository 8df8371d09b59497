use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Number of samples used unless a caller asks for something else.
pub const DEFAULT_GRID_LEN: usize = 4096;

/// Uniform, origin-symmetric sampling of one phase-space coordinate.
///
/// Samples sit at `q_n = (n - N/2 + 1/2) dq` with `dq = sqrt(2 pi / N)`, so
/// the grid is mirror symmetric and the same points serve as conjugate
/// (momentum) samples: the discrete Fourier transform maps the grid onto
/// itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    len: usize,
}

impl Grid {
    pub fn new(len: usize) -> Result<Self> {
        if len < 16 || !len.is_power_of_two() {
            return Err(Error::Resolution(format!("grid length must be a power of two >= 16, got {len}")));
        }
        Ok(Self { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (2.0 * PI / self.len as f64).sqrt()
    }

    /// Midpoint coordinate; always the phase-space origin.
    pub fn center(&self) -> f64 {
        0.0
    }

    /// Total covered length `N dq`.
    pub fn extent(&self) -> f64 {
        self.len as f64 * self.spacing()
    }

    pub fn coordinate(&self, n: usize) -> f64 {
        (n as f64 - (self.len as f64 - 1.0) / 2.0) * self.spacing()
    }

    pub fn coordinates(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(|n| self.coordinate(n))
    }
}

/// Wavefunction samples `psi(q_n)` on a [`Grid`].
///
/// Amplitudes are values of the continuous wavefunction, so the norm is
/// `sqrt(sum |psi_n|^2 dq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl GridState {
    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Resolution(format!(
                "{} amplitudes for a grid of {} samples",
                amplitudes.len(),
                grid.len()
            )));
        }
        if amplitudes.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        Ok(Self { grid, amplitudes })
    }

    /// Samples a function of `q`.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::from_amplitudes(grid, grid.coordinates().map(f).collect())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn center(&self) -> f64 {
        self.grid.center()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>() * self.spacing()).sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize a state of norm {norm}")));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &GridState) -> Complex64 {
        assert_eq!(self.grid, other.grid, "states live on different grids");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            * self.spacing()
    }

    /// L2 distance `||self - other||`.
    pub fn distance(&self, other: &GridState) -> f64 {
        assert_eq!(self.grid, other.grid, "states live on different grids");
        (self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            * self.spacing())
        .sqrt()
    }

    /// `<q>` of the (normalized) density.
    pub fn mean_position(&self) -> f64 {
        let weights: f64 = self.amplitudes.iter().map(Complex64::norm_sqr).sum();
        self.grid
            .coordinates()
            .zip(&self.amplitudes)
            .map(|(q, a)| q * a.norm_sqr())
            .sum::<f64>()
            / weights
    }

    /// Writes `q,re,im,abs2` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numerical(format!("csv output failed: {e}"));
        w.write_record(["q", "re", "im", "abs2"]).map_err(io)?;
        for (q, a) in self.grid.coordinates().zip(&self.amplitudes) {
            w.write_record([q.to_string(), a.re.to_string(), a.im.to_string(), a.norm_sqr().to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Numerical(format!("csv output failed: {e}")))
    }
}

/// Normalized Gaussian `exp(-(q - center)^2 / (2 width^2))`.
///
/// The width must span at least four samples and at most a quarter of the grid.
pub fn gaussian_state(grid: Grid, width: f64, center: f64) -> Result<GridState> {
    let dq = grid.spacing();
    if !(width.is_finite() && width >= 4.0 * dq && width <= grid.extent() / 4.0) {
        return Err(Error::Resolution(format!(
            "Gaussian width {width} not resolvable on {} samples (allowed {} to {})",
            grid.len(),
            4.0 * dq,
            grid.extent() / 4.0
        )));
    }
    if !center.is_finite() || center.abs() + 4.0 * width > grid.extent() / 2.0 {
        return Err(Error::Resolution(format!("Gaussian center {center} too close to the grid edge")));
    }
    GridState::from_fn(grid, |q| {
        let z = (q - center) / width;
        Complex64::new((-0.5 * z * z).exp(), 0.0)
    })?
    .normalized()
}

/// Unitary discrete Fourier transform on the symmetric grid,
/// `F[m][n] = exp(-i q_m q_n) / sqrt(N)`, evaluated with an FFT.
pub(crate) struct CenteredDft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
}

impl CenteredDft {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let n = len as f64;
        let c = (n - 1.0) / 2.0;
        // (m - c)(n - c) = mn - c m - c n + c^2
        let pre = (0..len).map(|k| Complex64::from_polar(1.0, 2.0 * PI * c * k as f64 / n)).collect();
        let global = Complex64::from_polar(1.0 / n.sqrt(), -2.0 * PI * c * c / n);
        let post = (0..len)
            .map(|k| global * Complex64::from_polar(1.0, 2.0 * PI * c * k as f64 / n))
            .collect();
        Self { forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len), pre, post }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        data.iter_mut().zip(&self.pre).for_each(|(x, p)| *x *= p);
        self.forward.process(data);
        data.iter_mut().zip(&self.post).for_each(|(x, p)| *x *= p);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        data.iter_mut().zip(&self.post).for_each(|(x, p)| *x *= p.conj());
        self.inverse.process(data);
        data.iter_mut().zip(&self.pre).for_each(|(x, p)| *x *= p.conj());
    }
}

/// Fourier transform `(1 / sqrt(2 pi)) int exp(-i p q) psi(q) dq` on the grid.
///
/// Reference implementation of the quarter-turn rotation.
pub fn fourier_transform(state: &GridState) -> GridState {
    let mut out = state.clone();
    CenteredDft::new(state.grid.len()).forward(&mut out.amplitudes);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric() {
        let g = Grid::new(64).unwrap();
        for n in 0..64 {
            assert!((g.coordinate(n) + g.coordinate(63 - n)).abs() < 1e-14);
        }
        assert!((g.extent() - (2.0 * PI * 64.0).sqrt()).abs() < 1e-12);
        assert!(Grid::new(100).is_err());
        assert!(Grid::new(8).is_err());
    }

    #[test]
    fn gaussian_is_normalized_and_centered() {
        let g = Grid::new(1024).unwrap();
        let s = gaussian_state(g, 2.0, 0.0).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!(s.mean_position().abs() < 1e-12);
        let shifted = gaussian_state(g, 2.0, 3.0).unwrap();
        assert!((shifted.mean_position() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_resolution_limits() {
        let g = Grid::new(256).unwrap();
        assert!(matches!(gaussian_state(g, 0.1, 0.0), Err(Error::Resolution(_))));
        assert!(matches!(gaussian_state(g, 30.0, 0.0), Err(Error::Resolution(_))));
        assert!(gaussian_state(g, 1.0, 0.0).is_ok());
    }

    #[test]
    fn dft_matches_direct_sum() {
        let g = Grid::new(32).unwrap();
        let s = GridState::from_fn(g, |q| Complex64::new((-q * q / 3.0).exp(), 0.2 * q)).unwrap();
        let fast = fourier_transform(&s);
        for m in 0..32 {
            let pm = g.coordinate(m);
            let direct: Complex64 = g
                .coordinates()
                .zip(s.amplitudes())
                .map(|(q, a)| a * Complex64::from_polar(1.0, -pm * q))
                .sum::<Complex64>()
                / (32f64).sqrt();
            assert!((direct - fast.amplitudes()[m]).norm() < 1e-12);
        }
        let mut back = fast.amplitudes().to_vec();
        CenteredDft::new(32).inverse(&mut back);
        for (a, b) in back.iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_columns() {
        let g = Grid::new(16).unwrap();
        let s = GridState::from_fn(g, |_| Complex64::new(1.0, -1.0)).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("q,re,im,abs2"));
        assert_eq!(lines.count(), 16);
        assert!(text.lines().nth(1).unwrap().ends_with(",1,-1,2"));
    }
}
