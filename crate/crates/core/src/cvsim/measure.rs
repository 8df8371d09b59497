use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::frft::frft;
use super::grid::{gaussian_state, Grid, GridState, DEFAULT_GRID_LEN};
use super::mask::BinMask;
use crate::config::{MumConfig, PhysicalScale};
use crate::error::{Error, Result};

/// Fraction of the grid samples, at each end, treated as the absorbing edge
/// (at least one sample).
pub const GUARD_FRACTION: f64 = 1.0 / 128.0;

/// Edge losses above this are reported with a measurement.
pub const LOSS_NOTICE: f64 = 1e-6;

/// Edge losses above this make a measurement fail with [`Error::GridTooSmall`].
pub const LOSS_LIMIT: f64 = 1e-3;

/// Squared norms below this count as an empty preparation.
const EMPTY_NORM_SQR: f64 = 1e-24;

const SUM_TOLERANCE: f64 = 1e-9;

/// Probabilities of the `d` outcomes of one measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OutcomeDistribution(Vec<f64>);

impl OutcomeDistribution {
    /// Checks that `probs` is a distribution: entries in `[0, 1]` summing to 1
    /// within `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Domain(format!("a distribution needs at least 2 outcomes, got {}", probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || total.is_nan() || total <= 0.0 {
            return Err(Error::Numerical(format!("cannot normalize weights {weights:?}")));
        }
        Self::new(weights.into_iter().map(|w| (w / total).min(1.0)).collect())
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(vec![1.0 / d as f64; d])
    }

    /// All weight on outcome `u`.
    pub fn point(d: usize, u: usize) -> Result<Self> {
        if u >= d {
            return Err(Error::Domain(format!("outcome {u} out of range for d = {d}")));
        }
        let mut p = vec![0.0; d];
        p[u] = 1.0;
        Self::new(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for OutcomeDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<OutcomeDistribution> for Vec<f64> {
    fn from(p: OutcomeDistribution) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub distribution: OutcomeDistribution,
    /// Probability found in the guard bands at the grid edges. The
    /// distribution is renormalized over the interior.
    pub truncation_loss: f64,
}

impl Measurement {
    /// Whether the edge loss is large enough to be worth reporting.
    pub fn loss_is_notable(&self) -> bool {
        self.truncation_loss > LOSS_NOTICE
    }
}

/// Mask of direction `j` of `config`.
pub fn direction_mask(config: &MumConfig, j: usize) -> Result<BinMask> {
    check_direction(config, j)?;
    BinMask::new(config.periods()[j], config.d() as usize, config.offsets()[j])
}

/// Rotates a lab-frame state into direction `j` and keeps the bins of outcome
/// `u`, weighting edge samples as in [`BinMask::sample_weight`]. The result is
/// normalized and expressed in the frame of direction `j`.
pub fn prepare(input: &GridState, config: &MumConfig, j: usize, u: usize) -> Result<GridState> {
    let mask = direction_mask(config, j)?;
    if u >= mask.bins() {
        return Err(Error::Domain(format!("outcome {u} out of range for d = {}", mask.bins())));
    }
    let rotated = frft(input, config.angles()[j])?;
    let grid = rotated.grid();
    let dq = grid.spacing();
    let amps: Vec<Complex64> = rotated
        .amplitudes()
        .iter()
        .zip(grid.coordinates())
        .map(|(a, q)| match mask.sample_weight(q, dq) {
            (v, w) if v == u => a * w,
            _ => Complex64::default(),
        })
        .collect();
    let kept = GridState::from_amplitudes(grid, amps)?;
    if kept.norm().powi(2) < EMPTY_NORM_SQR {
        return Err(Error::EmptyPreparation { direction: j, outcome: u });
    }
    kept.normalized()
}

/// Outcome probabilities for a state prepared along `from_j` (in that frame)
/// and measured along `to_k`.
pub fn measure_probs(state: &GridState, config: &MumConfig, from_j: usize, to_k: usize) -> Result<Measurement> {
    check_direction(config, from_j)?;
    let mask = direction_mask(config, to_k)?;
    let rotation = config.angles()[to_k] - config.angles()[from_j];
    Ok(measure_masks(state, rotation, &[mask])?.remove(0))
}

/// Rotates `state` once and bins the result with every mask in `masks`.
pub fn measure_masks(state: &GridState, rotation: f64, masks: &[BinMask]) -> Result<Vec<Measurement>> {
    let rotated = frft(state, rotation)?;
    let grid = rotated.grid();
    let intensity = intensity_profile(&rotated);
    let total: f64 = intensity.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Numerical("cannot measure a zero state".into()));
    }
    let n = grid.len();
    let guard = ((n as f64 * GUARD_FRACTION).ceil() as usize).max(1);
    let interior = guard..n - guard;
    let lost: f64 = intensity[..guard].iter().chain(&intensity[n - guard..]).sum();
    let loss = lost / total;
    if loss > LOSS_LIMIT {
        return Err(Error::GridTooSmall { loss });
    }
    masks
        .iter()
        .map(|mask| {
            let mut weights = vec![0.0; mask.bins()];
            for n in interior.clone() {
                let (u, w) = mask.sample_weight(grid.coordinate(n), grid.spacing());
                weights[u] += w * intensity[n];
            }
            Ok(Measurement { distribution: OutcomeDistribution::from_weights(weights)?, truncation_loss: loss })
        })
        .collect()
}

/// Probability density `|psi(q)|^2` at each sample.
pub fn intensity_profile(state: &GridState) -> Vec<f64> {
    state.amplitudes().iter().map(Complex64::norm_sqr).collect()
}

fn check_direction(config: &MumConfig, j: usize) -> Result<()> {
    if j >= config.r() {
        return Err(Error::Domain(format!("direction {j} out of range for R = {}", config.r())));
    }
    Ok(())
}

/// Intensity radius of the illuminating beam, in metres.
pub const BEAM_RADIUS: f64 = 2.54e-3;

/// Dimensionless Gaussian width of the illuminating beam.
///
/// A beam of `1/e^2` intensity radius `w` has amplitude
/// `exp(-x^2 / w^2)`, which is width `w / sqrt(2)` in the
/// `exp(-x^2 / (2 sigma^2))` convention.
pub fn experiment_beam_width(scale: &PhysicalScale) -> f64 {
    BEAM_RADIUS / SQRT_2 / scale.length_unit()
}

/// A source state on a fixed grid, for preparing and measuring repeatedly.
#[derive(Debug, Clone)]
pub struct Simulation {
    initial: GridState,
}

impl Simulation {
    pub fn new(initial: GridState) -> Result<Self> {
        Ok(Self { initial: initial.normalized()? })
    }

    /// Centered Gaussian of the given width.
    pub fn gaussian(grid_len: usize, width: f64) -> Result<Self> {
        Self::new(gaussian_state(Grid::new(grid_len)?, width, 0.0)?)
    }

    /// The illuminating beam of the default optical setup on the default grid.
    pub fn experiment() -> Result<Self> {
        Self::gaussian(DEFAULT_GRID_LEN, experiment_beam_width(&PhysicalScale::default()))
    }

    pub fn initial(&self) -> &GridState {
        &self.initial
    }

    pub fn grid(&self) -> Grid {
        self.initial.grid()
    }

    pub fn prepare(&self, config: &MumConfig, j: usize, u: usize) -> Result<GridState> {
        prepare(&self.initial, config, j, u)
    }

    pub fn prepare_and_measure(&self, config: &MumConfig, j: usize, u: usize, k: usize) -> Result<Measurement> {
        measure_probs(&self.prepare(config, j, u)?, config, j, k)
    }
}
