//! Entropies, divergences, period sweeps and entropy tables.
//!
//! All logarithms are base 2, so entropies and divergences are in bits.

use std::f64::consts::PI;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::config::{MumConfig, PhysicalScale};
use crate::cvsim::{measure_masks, BinMask, OutcomeDistribution, Simulation};
use crate::error::{Error, Result};

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(dist: &OutcomeDistribution) -> f64 {
    0.0 - dist.probs().iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

/// Kullback-Leibler divergence `D(P || U)` from the uniform distribution, in bits.
pub fn kl_uniform(dist: &OutcomeDistribution) -> f64 {
    let d = dist.len() as f64;
    dist.probs().iter().filter(|&&p| p > 0.0).map(|p| p * (p * d).log2()).sum::<f64>().max(0.0)
}

/// Mixes `dist` with the uniform distribution: `(1 - f) p + f / d`.
pub fn apply_background(dist: &OutcomeDistribution, noise_fraction: f64) -> Result<OutcomeDistribution> {
    if !(0.0..=1.0).contains(&noise_fraction) {
        return Err(Error::Domain(format!("noise fraction {noise_fraction} outside [0, 1]")));
    }
    let d = dist.len() as f64;
    OutcomeDistribution::new(
        dist.probs().iter().map(|p| ((1.0 - noise_fraction) * p + noise_fraction / d).min(1.0)).collect(),
    )
}

/// Mixing fraction under which a sharp outcome leaks `leakage` of its
/// probability into the other `d - 1` outcomes.
///
/// Uniform mixing puts `f / d` back on the sharp outcome, so the leaked
/// probability is `f (d - 1) / d`.
pub fn mixing_fraction_for_leakage(leakage: f64, d: u64) -> Result<f64> {
    let f = leakage * d as f64 / (d as f64 - 1.0);
    if d < 2 || !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(format!("leakage {leakage} not reachable for d = {d}")));
    }
    Ok(f)
}

/// Prepared and measured directions of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionPair {
    pub prepared: usize,
    pub measured: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub period_px: f64,
    /// `None` marks a gap, with the reason in `error`.
    pub entropy: Option<f64>,
    pub error: Option<String>,
    /// Set when this period is a marker.
    pub marker: Option<u64>,
}

/// A period at which the pair is unbiased for multiplier `m`, provided `m`
/// is coprime with `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMarker {
    pub m: u64,
    pub period_px: f64,
    pub allowed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub pair: DirectionPair,
    pub outcome: usize,
    /// Ordered by strictly increasing period.
    pub samples: Vec<SweepSample>,
    pub markers: Vec<SweepMarker>,
}

impl SweepResult {
    pub fn sample_at_marker(&self, m: u64) -> Option<&SweepSample> {
        self.samples.iter().find(|s| s.marker == Some(m))
    }
}

/// Trial periods in pixels, `from, from + step, ...` up to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRange {
    pub from_px: f64,
    pub to_px: f64,
    pub step_px: f64,
}

impl PeriodRange {
    /// Default step of one modulator pixel.
    pub fn pixels(from_px: f64, to_px: f64) -> Self {
        Self { from_px, to_px, step_px: 1.0 }
    }

    fn points(&self) -> Result<Vec<f64>> {
        let Self { from_px, to_px, step_px } = *self;
        if !(from_px > 0.0 && to_px >= from_px && step_px > 0.0 && to_px.is_finite()) {
            return Err(Error::Domain(format!("bad period range {from_px}..{to_px} step {step_px}")));
        }
        let count = ((to_px - from_px) / step_px + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::Resource(format!("{count} sweep samples requested")));
        }
        Ok((0..count).map(|i| from_px + i as f64 * step_px).collect())
    }
}

/// Periods of direction `k` that make it unbiased with direction `j` for
/// multipliers `1..=max_m`, in pixels.
pub fn sweep_markers(config: &MumConfig, scale: &PhysicalScale, j: usize, k: usize, max_m: u64) -> Vec<SweepMarker> {
    let d = config.d();
    let sin = (config.angles()[k] - config.angles()[j]).sin().abs();
    (1..=max_m)
        .map(|m| SweepMarker {
            m,
            period_px: scale.to_pixels(2.0 * PI * d as f64 * sin / (m as f64 * config.periods()[j])),
            allowed: m.gcd(&d) == 1,
        })
        .collect()
}

/// Entropy of direction `k` for a state prepared in `(j, u)` while the period
/// of `k` runs over `range` and over the marker periods for `m <= max_m`.
///
/// The offset of `k` is rescaled with its period, so a centered mask stays
/// centered. Samples whose measurement fails are kept as gaps.
#[allow(clippy::too_many_arguments)]
pub fn entropy_sweep(
    config: &MumConfig,
    sim: &Simulation,
    scale: &PhysicalScale,
    (j, u): (usize, usize),
    k: usize,
    range: PeriodRange,
    max_m: u64,
) -> Result<SweepResult> {
    if j >= config.r() || k >= config.r() || j == k {
        return Err(Error::Domain(format!("invalid direction pair ({j}, {k}) for R = {}", config.r())));
    }
    if config.angles()[j] == config.angles()[k] {
        return Err(Error::DegenerateAngle(format!("directions {j} and {k} are parallel")));
    }
    let markers = if max_m > 0 { sweep_markers(config, scale, j, k, max_m) } else { Vec::new() };

    let mut periods: Vec<(f64, Option<u64>)> = range.points()?.into_iter().map(|p| (p, None)).collect();
    periods.extend(markers.iter().map(|m| (m.period_px, Some(m.m))));
    periods.sort_by(|a, b| a.0.total_cmp(&b.0));
    periods.dedup_by(|later, earlier| {
        let same = (later.0 - earlier.0).abs() < 1e-9;
        if same && earlier.1.is_none() {
            earlier.1 = later.1;
        }
        same
    });

    let state = sim.prepare(config, j, u)?;
    let d = config.d() as usize;
    let base_period = config.periods()[k];
    let base_offset = config.offsets()[k];
    let masks: Vec<Result<BinMask>> = periods
        .iter()
        .map(|&(px, _)| {
            let t = scale.from_pixels(px);
            BinMask::new(t, d, base_offset * t / base_period)
        })
        .collect();
    let valid: Vec<BinMask> = masks.iter().filter_map(|m| m.as_ref().ok().copied()).collect();
    let rotation = config.angles()[k] - config.angles()[j];
    let mut measured = match measure_masks(&state, rotation, &valid) {
        Ok(ms) => ms.into_iter().map(|m| Ok(shannon_entropy(&m.distribution))).collect::<Vec<_>>(),
        Err(e) => vec![Err(e); valid.len()],
    }
    .into_iter();

    let samples = periods
        .into_iter()
        .zip(masks)
        .map(|((period_px, marker), mask)| {
            let entropy = mask.and_then(|_| measured.next().expect("one result per valid mask"));
            SweepSample {
                period_px,
                entropy: entropy.as_ref().ok().copied(),
                error: entropy.err().map(|e| e.to_string()),
                marker,
            }
        })
        .collect();
    Ok(SweepResult { pair: DirectionPair { prepared: j, measured: k }, outcome: u, samples, markers })
}

/// Entropy and divergence of every prepare/measure pair of a configuration.
///
/// Rows are preparation directions, columns measurement directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTables {
    pub outcome: usize,
    pub noise_fraction: f64,
    pub entropy: Vec<Vec<f64>>,
    pub kl: Vec<Vec<f64>>,
    pub distributions: Vec<Vec<OutcomeDistribution>>,
    /// Largest edge loss over all measurements.
    pub truncation_loss: f64,
}

/// Tables for preparations with outcome `u = 0`.
pub fn reproduce_tables(config: &MumConfig, noise_fraction: f64, sim: &Simulation) -> Result<EntropyTables> {
    reproduce_tables_for_outcome(config, noise_fraction, sim, 0)
}

pub fn reproduce_tables_for_outcome(
    config: &MumConfig,
    noise_fraction: f64,
    sim: &Simulation,
    u: usize,
) -> Result<EntropyTables> {
    let r = config.r();
    let mut entropy = vec![vec![0.0; r]; r];
    let mut kl = vec![vec![0.0; r]; r];
    let mut distributions = Vec::with_capacity(r);
    let mut truncation_loss: f64 = 0.0;
    for j in 0..r {
        let mut row = Vec::with_capacity(r);
        for k in 0..r {
            let m = sim.prepare_and_measure(config, j, u, k)?;
            truncation_loss = truncation_loss.max(m.truncation_loss);
            let p = apply_background(&m.distribution, noise_fraction)?;
            entropy[j][k] = shannon_entropy(&p);
            kl[j][k] = kl_uniform(&p);
            row.push(p);
        }
        distributions.push(row);
    }
    Ok(EntropyTables { outcome: u, noise_fraction, entropy, kl, distributions, truncation_loss })
}
