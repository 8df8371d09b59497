//! Mutually unbiased PCG configurations: directions, periods and multipliers.
//!
//! A configuration of `R` measurements with `d` outcomes is mutually unbiased
//! when, for every pair `j > k`,
//!
//! ```text
//! T_j * T_k * m_jk = 2 pi d |sin(theta_j - theta_k)|
//! ```
//!
//! with positive integers `m_jk` coprime with `d`. Only the symmetric family
//! (`theta_j = j theta`, `tan theta = sqrt(Q)`, `T_0 = sqrt(pi d tan theta)`)
//! is synthesized here; arbitrary configurations can be checked with
//! [`verify_config`].

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{consistent_family, coprime_with_dimension, r_max, MultiplierMatrix};

/// Schema tag written into serialized configurations.
pub const CONFIG_SCHEMA: &str = "pcg-mum/config/v1";

/// Relative tolerance used when deciding that a floating-point multiplier is an integer.
pub const INTEGER_TOLERANCE: f64 = 1e-9;

const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigDocument", into = "ConfigDocument")]
pub struct MumConfig {
    d: u64,
    angles: Vec<f64>,
    periods: Vec<f64>,
    m_matrix: MultiplierMatrix,
    offsets: Vec<f64>,
}

/// Serialized form of [`MumConfig`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigDocument {
    schema: String,
    d: u64,
    /// Radians.
    angles: Vec<f64>,
    /// Dimensionless periods `T_j`.
    periods: Vec<f64>,
    /// Row `j` lists `m[j][0..j]`.
    m_matrix: MultiplierMatrix,
    offsets: Vec<f64>,
}

impl TryFrom<ConfigDocument> for MumConfig {
    type Error = Error;

    fn try_from(doc: ConfigDocument) -> Result<Self> {
        if doc.schema != CONFIG_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported schema {:?}, expected {CONFIG_SCHEMA:?}",
                doc.schema
            )));
        }
        MumConfig::new(doc.d, doc.angles, doc.periods, doc.m_matrix, doc.offsets)
    }
}

impl From<MumConfig> for ConfigDocument {
    fn from(c: MumConfig) -> Self {
        ConfigDocument {
            schema: CONFIG_SCHEMA.to_string(),
            d: c.d,
            angles: c.angles,
            periods: c.periods,
            m_matrix: c.m_matrix,
            offsets: c.offsets,
        }
    }
}

impl MumConfig {
    /// Assembles a configuration, normalizing the directions.
    ///
    /// Angles are reduced to the upper half plane `[0, pi)`: a direction at
    /// `theta + pi` is the reflection `q -> -q` of the one at `theta`, so its
    /// offset is negated (outcome labels of such a direction read mirrored,
    /// `u -> d - 1 - u`). Directions are then sorted by angle, carrying periods,
    /// offsets and multipliers along, and the first angle must be zero.
    ///
    /// Only structural invariants are enforced; whether the periods and
    /// multipliers are mutually unbiased is reported by [`verify_config`].
    pub fn new(
        d: u64,
        angles: Vec<f64>,
        periods: Vec<f64>,
        m_matrix: MultiplierMatrix,
        offsets: Vec<f64>,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidConfig(format!("dimension must be at least 2, got {d}")));
        }
        let r = angles.len();
        if r == 0 || periods.len() != r || offsets.len() != r || m_matrix.size() != r {
            return Err(Error::InvalidConfig(format!(
                "inconsistent lengths: {r} angles, {} periods, {} offsets, {} multiplier rows",
                periods.len(),
                offsets.len(),
                m_matrix.size()
            )));
        }
        if let Some(t) = periods.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidConfig(format!("periods must be positive and finite, got {t}")));
        }
        if angles.iter().chain(&offsets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("angles and offsets must be finite".into()));
        }

        let mut dirs: Vec<(f64, f64, f64, usize)> = angles
            .iter()
            .zip(&periods)
            .zip(&offsets)
            .enumerate()
            .map(|(i, ((&theta, &period), &offset))| {
                let mut theta = theta.rem_euclid(2.0 * PI);
                let mut offset = offset;
                if theta >= PI - ANGLE_EPS {
                    theta -= PI;
                    offset = -offset;
                }
                if theta.abs() < ANGLE_EPS || (PI - theta).abs() < ANGLE_EPS {
                    theta = 0.0;
                }
                (theta, period, offset, i)
            })
            .collect();
        dirs.sort_by(|a, b| a.0.total_cmp(&b.0));

        if dirs[0].0 != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "the first direction must have angle 0, smallest angle is {}",
                dirs[0].0
            )));
        }
        if dirs.windows(2).any(|w| w[1].0 - w[0].0 < ANGLE_EPS) {
            return Err(Error::DegenerateAngle("two directions are parallel".into()));
        }

        let order: Vec<usize> = dirs.iter().map(|d| d.3).collect();
        let rows = (0..r)
            .map(|j| (0..j).map(|k| m_matrix.get(order[j], order[k])).collect())
            .collect();

        Ok(Self {
            d,
            angles: dirs.iter().map(|d| d.0).collect(),
            periods: dirs.iter().map(|d| d.1).collect(),
            offsets: dirs.iter().map(|d| d.2).collect(),
            m_matrix: MultiplierMatrix::new(rows)?,
        })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// Number of directions `R`.
    pub fn r(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn m_matrix(&self) -> &MultiplierMatrix {
        &self.m_matrix
    }

    /// Bin width `s_j = T_j / d`.
    pub fn bin_width(&self, j: usize) -> f64 {
        self.periods[j] / self.d as f64
    }

    /// Replaces the offsets `q_j^cen`.
    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != self.r() || offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidConfig(format!("expected {} finite offsets", self.r())));
        }
        self.offsets = offsets;
        Ok(self)
    }

    /// Replaces one period, keeping everything else. The result is generally
    /// no longer mutually unbiased.
    pub fn with_period(mut self, j: usize, period: f64) -> Result<Self> {
        if j >= self.r() || !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidConfig(format!("cannot set period {period} on direction {j}")));
        }
        self.periods[j] = period;
        Ok(self)
    }
}

/// Offsets `-s_j / 2`, which center bin 0 of every direction on the origin.
pub fn centered_offsets(periods: &[f64], d: u64) -> Vec<f64> {
    periods.iter().map(|t| -t / (2.0 * d as f64)).collect()
}

/// Laboratory units of the optical implementation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    /// Meters.
    pub wavelength: f64,
    /// Distance between the FrFT lenses, meters.
    pub lens_spacing: f64,
    /// Modulator pixel pitch, meters.
    pub pixel_pitch: f64,
}

impl Default for PhysicalScale {
    /// He-Ne laser at 632.9 nm, 0.29 m lens spacing and 8 um pixels.
    fn default() -> Self {
        Self { wavelength: 632.9e-9, lens_spacing: 0.29, pixel_pitch: 8e-6 }
    }
}

impl PhysicalScale {
    pub fn new(wavelength: f64, lens_spacing: f64, pixel_pitch: f64) -> Result<Self> {
        let scale = Self { wavelength, lens_spacing, pixel_pitch };
        scale.validate()?;
        Ok(scale)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("lens spacing", self.lens_spacing),
            ("pixel pitch", self.pixel_pitch),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Length in meters of one dimensionless unit, `sqrt(lambda z / pi)`.
    pub fn length_unit(&self) -> f64 {
        (self.wavelength * self.lens_spacing / PI).sqrt()
    }

    pub fn to_pixels(&self, dimensionless: f64) -> f64 {
        dimensionless * self.length_unit() / self.pixel_pitch
    }

    pub fn from_pixels(&self, pixels: f64) -> f64 {
        pixels * self.pixel_pitch / self.length_unit()
    }
}

/// Periods from the `k = 0` conditions: `T_j = 2 pi d sin(theta_j) / (m_j0 T_0)`.
///
/// `m_col[j - 1]` holds `m_j0`; the result starts with `t0`.
pub fn periods_from_anchor(d: u64, t0: f64, angles: &[f64], m_col: &[u64]) -> Result<Vec<f64>> {
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::Domain(format!("anchor period must be positive, got {t0}")));
    }
    if angles.is_empty() || m_col.len() + 1 != angles.len() {
        return Err(Error::Domain(format!(
            "need R - 1 = {} multipliers for {} angles, got {}",
            angles.len().saturating_sub(1),
            angles.len(),
            m_col.len()
        )));
    }
    let mut periods = Vec::with_capacity(angles.len());
    periods.push(t0);
    for (j, &m) in (1..).zip(m_col) {
        let theta = angles[j];
        let sin = theta.sin();
        if sin <= ANGLE_EPS {
            return Err(Error::DegenerateAngle(format!(
                "direction {j} at angle {theta} is parallel to direction 0 or outside the upper half plane"
            )));
        }
        if m == 0 {
            return Err(Error::Domain(format!("m_{j}0 must be positive")));
        }
        periods.push(2.0 * PI * d as f64 * sin / (m as f64 * t0));
    }
    Ok(periods)
}

/// `cot(j theta) / cot(theta)` as an exact rational function of `Q = tan^2 theta`.
///
/// Numerator and denominator are the even and odd parts of the binomial
/// expansion of `(1 + i tan theta)^j`, which only involve powers of `Q`.
pub fn cot_ratio(j: u32, q: &BigRational) -> Result<BigRational> {
    if j == 0 {
        return Err(Error::Domain("cot(0) is undefined".into()));
    }
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    let mut binom = BigInt::one();
    let mut q_pow = BigRational::one();
    for l in 0..=j {
        // binom = C(j, l), q_pow = Q^(l / 2)
        let term = BigRational::from_integer(binom.clone()) * &q_pow;
        let sign_negative = (l / 2) % 2 == 1;
        let signed = if sign_negative { -term } else { term };
        if l % 2 == 0 {
            num += signed;
        } else {
            den += signed;
            q_pow *= q;
        }
        binom = binom * BigInt::from(j - l) / BigInt::from(l + 1);
    }
    if den.is_zero() {
        return Err(Error::DegenerateAngle(format!("{j} theta is a multiple of pi")));
    }
    Ok(num / den)
}

/// Symmetric configuration with `theta_j = j theta`, `tan theta = sqrt(q)` and
/// `T_0 = sqrt(pi d tan theta)`.
///
/// `m_col0[j - 1]` is `m_j0`. The remaining multipliers follow from
/// `m_jk = m_j0 m_k0 (cot(k theta) - cot(j theta)) tan(theta) / 2`, evaluated in
/// exact rational arithmetic; each must be a positive integer coprime with
/// `d`. Bins are centered on the origin (offset `-s_j / 2`).
pub fn build_symmetric(d: u64, q: Ratio<i64>, r: usize, m_col0: &[u64]) -> Result<MumConfig> {
    let max = r_max(d)?;
    if r < 2 {
        return Err(Error::Domain(format!("need at least two directions, got {r}")));
    }
    if r as u64 > max {
        return Err(Error::Bound { d, requested: r, max });
    }
    if m_col0.len() != r - 1 {
        return Err(Error::Domain(format!("need {} values m_j0, got {}", r - 1, m_col0.len())));
    }
    for (j, &m) in m_col0.iter().enumerate().map(|(i, m)| (i + 1, m)) {
        if !coprime_with_dimension(m, d) {
            return Err(Error::Construction { j, k: 0, reason: format!("m_{j}0 = {m} is not coprime with d = {d}") });
        }
    }
    if *q.numer() <= 0 || *q.denom() <= 0 {
        return Err(Error::Domain(format!("Q must be a positive rational, got {q}")));
    }

    let q_f = q.to_f64().ok_or_else(|| Error::Domain(format!("Q = {q} is not representable")))?;
    let tan = q_f.sqrt();
    let theta = tan.atan();
    if theta > PI / r as f64 + ANGLE_EPS {
        return Err(Error::Domain(format!(
            "theta = atan(sqrt({q})) = {theta} exceeds pi / R = {}",
            PI / r as f64
        )));
    }
    let angles: Vec<f64> = (0..r).map(|j| j as f64 * theta).collect();
    let t0 = (PI * d as f64 * tan).sqrt();
    let periods = periods_from_anchor(d, t0, &angles, m_col0)?;

    let q_exact = BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()));
    let ratios = (1..r as u32).map(|j| cot_ratio(j, &q_exact)).collect::<Result<Vec<_>>>()?;
    let two = BigRational::from_integer(BigInt::from(2));
    let mut rows: Vec<Vec<u64>> = vec![Vec::new()];
    for j in 1..r {
        let mut row = vec![m_col0[j - 1]];
        for k in 1..j {
            let scale = BigRational::from_integer(BigInt::from(m_col0[j - 1]) * BigInt::from(m_col0[k - 1]));
            let exact = scale * (&ratios[k - 1] - &ratios[j - 1]) / &two;
            let m = admissible_multiplier(&exact, d).map_err(|reason| Error::Construction { j, k, reason })?;

            let float = m_col0[j - 1] as f64 * m_col0[k - 1] as f64 * t0 * t0 / (2.0 * PI * d as f64)
                * (1.0 / angles[k].tan() - 1.0 / angles[j].tan());
            if (float - m as f64).abs() >= INTEGER_TOLERANCE * (m as f64).max(1.0) {
                return Err(Error::Numerical(format!(
                    "floating-point m_{j}{k} = {float} disagrees with the exact value {m}"
                )));
            }
            row.push(m);
        }
        rows.push(row);
    }

    let offsets = centered_offsets(&periods, d);
    MumConfig::new(d, angles, periods, MultiplierMatrix::new(rows)?, offsets)
}

fn admissible_multiplier(value: &BigRational, d: u64) -> std::result::Result<u64, String> {
    if !value.is_integer() {
        return Err(format!("m = {value} is not an integer"));
    }
    if !value.is_positive() {
        return Err(format!("m = {value} is not positive"));
    }
    let m = value
        .to_integer()
        .to_u64()
        .ok_or_else(|| format!("m = {value} does not fit in 64 bits"))?;
    if !coprime_with_dimension(m, d) {
        return Err(format!("m = {m} is not coprime with d = {d}"));
    }
    Ok(m)
}

/// Check of one pair `(j, k)`, `j > k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub j: usize,
    pub k: usize,
    /// `2 pi d |sin theta_jk| / (T_j T_k)`.
    pub implied: f64,
    pub nearest: u64,
    /// `|implied - nearest| / max(nearest, 1)`.
    pub residual: f64,
    pub coprime: bool,
    /// Multiplier stored in the configuration.
    pub stored: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub d: u64,
    pub rel_tol: f64,
    pub pairs: Vec<PairCheck>,
    /// Whether the stored multipliers satisfy the integer relations.
    pub family_consistent: bool,
    pub pass: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &PairCheck> {
        self.pairs.iter().filter(|p| !p.pass)
    }
}

/// Checks every pair of directions against the mutual-unbiasedness condition.
///
/// A pair passes when its implied multiplier is within `rel_tol` of a positive
/// integer that is coprime with `d` and equal to the stored multiplier.
pub fn verify_config(config: &MumConfig, rel_tol: f64) -> VerificationReport {
    let d = config.d;
    let mut pairs = Vec::new();
    for j in 1..config.r() {
        for k in 0..j {
            let sin = (config.angles[j] - config.angles[k]).sin().abs();
            let implied = 2.0 * PI * d as f64 * sin / (config.periods[j] * config.periods[k]);
            let nearest = implied.round().max(0.0) as u64;
            let residual = (implied - nearest as f64).abs() / (nearest as f64).max(1.0);
            let coprime = coprime_with_dimension(nearest, d);
            let stored = config.m_matrix.get(j, k);
            let pass = nearest >= 1 && residual < rel_tol && coprime && nearest == stored;
            pairs.push(PairCheck { j, k, implied, nearest, residual, coprime, stored, pass });
        }
    }
    let family_consistent = consistent_family(&config.m_matrix, d);
    let pass = family_consistent && pairs.iter().all(|p| p.pass);
    VerificationReport { d, rel_tol, pairs, family_consistent, pass }
}

/// Periods in pixels, `T'_j = sqrt(lambda z / pi) T_j / pitch`.
pub fn to_physical(config: &MumConfig, scale: &PhysicalScale) -> Vec<f64> {
    config.periods.iter().map(|&t| scale.to_pixels(t)).collect()
}

/// Pixel periods rounded for a modulator, with the resulting error in the
/// unbiasedness condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PixelRounding {
    pub exact_px: Vec<f64>,
    pub rounded_px: Vec<u64>,
    /// Per pair `(j, k, relative residual)` of the condition with rounded periods.
    pub pair_residuals: Vec<(usize, usize, f64)>,
}

/// Rounds each pixel period to the nearest multiple of `multiple` pixels
/// (use `d` to get integer bin widths).
pub fn round_to_pixels(config: &MumConfig, scale: &PhysicalScale, multiple: u64) -> Result<PixelRounding> {
    scale.validate()?;
    if multiple == 0 {
        return Err(Error::Domain("rounding multiple must be positive".into()));
    }
    let exact_px = to_physical(config, scale);
    let step = multiple as f64;
    let rounded_px: Vec<u64> = exact_px.iter().map(|p| ((p / step).round() * step).max(step) as u64).collect();
    let mut pair_residuals = Vec::new();
    for j in 1..config.r() {
        for k in 0..j {
            let tj = scale.from_pixels(rounded_px[j] as f64);
            let tk = scale.from_pixels(rounded_px[k] as f64);
            let lhs = tj * tk * config.m_matrix.get(j, k) as f64;
            let rhs = 2.0 * PI * config.d as f64 * (config.angles[j] - config.angles[k]).sin().abs();
            pair_residuals.push((j, k, (lhs - rhs).abs() / rhs));
        }
    }
    Ok(PixelRounding { exact_px, rounded_px, pair_residuals })
}

/// Overlap `|<q_j|q_k>| = (2 pi |sin theta_jk|)^(-1/2)` of rotated quadrature eigenstates.
pub fn cv_overlap(theta_jk: f64) -> Result<f64> {
    let sin = theta_jk.sin().abs();
    if sin < ANGLE_EPS {
        return Err(Error::DegenerateAngle(format!("angle {theta_jk} is parallel; the overlap is a delta function")));
    }
    Ok((2.0 * PI * sin).powf(-0.5))
}

/// Greatest common divisor of the stored multipliers with `d`, per pair, for diagnostics.
pub fn multiplier_gcds(config: &MumConfig) -> Vec<(usize, usize, u64)> {
    config.m_matrix.entries().map(|(j, k, m)| (j, k, m.gcd(&config.d))).collect()
}
