use crate::error::{Error, Result};

/// Periodic coarse-graining of one quadrature into `bins` outcomes.
///
/// Outcome `u` collects the half-open intervals
/// `[offset + u s + n T, offset + (u + 1) s + n T)` for all integers `n`,
/// with `s = T / bins`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinMask {
    period: f64,
    bins: usize,
    offset: f64,
}

impl BinMask {
    pub fn new(period: f64, bins: usize, offset: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidConfig(format!("mask period must be positive, got {period}")));
        }
        if bins < 2 {
            return Err(Error::InvalidConfig(format!("a mask needs at least 2 bins, got {bins}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidConfig("mask offset must be finite".into()));
        }
        Ok(Self { period, bins, offset })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn bin_width(&self) -> f64 {
        self.period / self.bins as f64
    }

    /// The unique outcome whose bins contain `q`.
    pub fn outcome(&self, q: f64) -> usize {
        let z = (q - self.offset).rem_euclid(self.period);
        // rem_euclid can round up to exactly `period` for tiny negative inputs
        ((z / self.bin_width()).floor() as usize).min(self.bins - 1)
    }

    /// Indicator of outcome `u` at `q`: 1 inside its bins, 0 elsewhere.
    pub fn value(&self, q: f64, u: usize) -> u8 {
        u8::from(self.outcome(q) == u)
    }

    /// Outcome of a grid sample at `q` and its quadrature weight for sample
    /// spacing `dq`.
    ///
    /// Interior samples weigh 1. The first and last samples of each bin also
    /// absorb the part of the bin lying beyond their own cell, so the weights
    /// of a bin add up to its width over `dq` and no sample is shared
    /// between outcomes.
    pub fn sample_weight(&self, q: f64, dq: f64) -> (usize, f64) {
        let s = self.bin_width();
        let u = self.outcome(q);
        let t = ((q - self.offset).rem_euclid(self.period) - u as f64 * s).clamp(0.0, s);
        let lo = if t < dq { 0.0 } else { t - dq / 2.0 };
        let hi = if s - t <= dq { s } else { t + dq / 2.0 };
        (u, (hi - lo) / dq)
    }
}
