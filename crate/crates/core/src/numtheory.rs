//! Integer machinery behind the bound on mutually unbiased PCG measurements.
//!
//! For `R` periodic coarse-grained measurements with `d` outcomes the pairwise
//! multipliers `m_jk` must be coprime with `d`, and for `j > k > 1` they obey
//!
//! ```text
//! m_j1 * m_k0 - m_j0 * m_k1 = m_jk * m_10
//! ```
//!
//! Reducing this modulo the smallest prime factor `p` of `d` forces the
//! residues `chi_k = m_k0 * inv(m_k1) (mod p)` to be pairwise distinct, so at
//! most `p - 1` directions can join the first two and `R <= p + 1`.
//! [`search_max_family`] checks that statement by enumeration.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper limit on the number of `(m_j0, m_j1)` candidates the family search accepts.
const MAX_SEARCH_CANDIDATES: usize = 4096;
/// Upper limit on visited search-tree nodes before giving up.
const MAX_SEARCH_STEPS: u64 = 200_000_000;

pub fn is_prime(n: u64) -> bool {
    n >= 2 && smallest_prime_factor(n) == Ok(n)
}

/// Smallest prime dividing `d`, by trial division.
pub fn smallest_prime_factor(d: u64) -> Result<u64> {
    if d < 2 {
        return Err(Error::Domain(format!("smallest prime factor needs d >= 2, got {d}")));
    }
    if d.is_multiple_of(2) {
        return Ok(2);
    }
    let mut f = 3u64;
    while f.checked_mul(f).is_some_and(|sq| sq <= d) {
        if d.is_multiple_of(f) {
            return Ok(f);
        }
        f += 2;
    }
    Ok(d)
}

/// Maximal number of pairwise mutually unbiased PCG measurements, `p + 1`.
pub fn r_max(d: u64) -> Result<u64> {
    Ok(smallest_prime_factor(d)? + 1)
}

/// Inverse of `m` modulo the prime `p`, in `[1, p - 1]`.
pub fn mod_inverse(m: u64, p: u64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("modulus {p} is not prime")));
    }
    if m.is_multiple_of(p) {
        return Err(Error::Domain(format!("{m} has no inverse modulo {p}")));
    }
    let a = i128::from(m % p);
    let gcd = a.extended_gcd(&i128::from(p));
    debug_assert_eq!(gcd.gcd, 1);
    let inv = gcd.x.rem_euclid(i128::from(p));
    Ok(u64::try_from(inv).expect("residue fits the modulus"))
}

/// Coprimality requirement on a multiplier: `m * n / d` is never a natural
/// number for `n = 1, ..., d - 1`. Evaluated as `gcd(m, d) == 1`.
pub fn coprime_with_dimension(m: u64, d: u64) -> bool {
    m >= 1 && d >= 2 && m.gcd(&d) == 1
}

/// Literal form of the coprimality requirement, scanning every `n` in `1..d`.
///
/// Linear in `d`; kept for cross-checking [`coprime_with_dimension`].
pub fn coprime_by_scan(m: u64, d: u64) -> bool {
    if m == 0 || d < 2 {
        return false;
    }
    (1..d).all(|n| (u128::from(m) * u128::from(n)) % u128::from(d) != 0)
}

/// Strictly lower-triangular matrix of positive multipliers `m[j][k]`, `j > k`.
///
/// Row `j` holds `j` entries; row `0` is empty. Construction only checks the
/// shape and positivity: coprimality and the integer relations are properties
/// tested by [`consistent_family`], so inadmissible matrices can still be
/// represented and reported on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct MultiplierMatrix {
    rows: Vec<Vec<u64>>,
}

impl MultiplierMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidConfig("multiplier matrix needs at least one row".into()));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != j {
                return Err(Error::InvalidConfig(format!(
                    "multiplier row {j} must hold {j} entries, found {}",
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|&m| m == 0) {
                return Err(Error::InvalidConfig(format!("multiplier m[{j}][{k}] must be positive")));
            }
        }
        Ok(Self { rows })
    }

    /// Number of directions `R`.
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// `m[j][k]` for `j > k`, or `m[k][j]` when the pair is given the other way round.
    pub fn get(&self, j: usize, k: usize) -> u64 {
        assert_ne!(j, k, "multipliers are defined for distinct directions only");
        let (hi, lo) = if j > k { (j, k) } else { (k, j) };
        self.rows[hi][lo]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    /// All `(j, k, m_jk)` with `j > k`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(k, &m)| (j, k, m)))
    }
}

impl TryFrom<Vec<Vec<u64>>> for MultiplierMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<MultiplierMatrix> for Vec<Vec<u64>> {
    fn from(m: MultiplierMatrix) -> Self {
        m.rows
    }
}

/// Whether `m` is an admissible family for dimension `d`: every entry is
/// coprime with `d` and `m_j1 m_k0 - m_j0 m_k1 = m_jk m_10` for all `j > k > 1`.
///
/// With fewer than three directions only the coprimality part applies.
pub fn consistent_family(m: &MultiplierMatrix, d: u64) -> bool {
    if !m.entries().all(|(_, _, v)| coprime_with_dimension(v, d)) {
        return false;
    }
    let r = m.size();
    if r < 3 {
        return true;
    }
    let at = |j: usize, k: usize| i128::from(m.get(j, k));
    for j in 3..r {
        for k in 2..j {
            let lhs = at(j, 1)
                .checked_mul(at(k, 0))
                .zip(at(j, 0).checked_mul(at(k, 1)))
                .and_then(|(a, b)| a.checked_sub(b));
            let rhs = at(j, k).checked_mul(at(1, 0));
            match (lhs, rhs) {
                (Some(l), Some(r)) if l == r => {}
                _ => return false,
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Skip candidates whose residue `chi` collides with an already chosen
    /// direction and bound branches by the number of free residue classes.
    CongruencePruned,
    /// Enumerate every compatible family without any bounding.
    Exhaustive,
}

/// Outcome of [`search_max_family_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySearch {
    pub d: u64,
    pub m_bound: u64,
    /// Largest number of directions found.
    pub max_r: usize,
    /// A family attaining `max_r`.
    pub witness: MultiplierMatrix,
    /// Search-tree nodes visited.
    pub steps: u64,
}

/// Largest `R` for which a consistent multiplier family with all entries in
/// `[1, m_bound]` exists. Uses congruence pruning.
pub fn search_max_family(d: u64, m_bound: u64) -> Result<usize> {
    Ok(search_max_family_with(d, m_bound, SearchStrategy::CongruencePruned)?.max_r)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    m0: u64,
    m1: u64,
    chi: u64,
}

struct FamilySearcher<'a> {
    d: u64,
    bound: u64,
    m10: u64,
    strategy: SearchStrategy,
    candidates: &'a [Candidate],
    compatible: Vec<Vec<bool>>,
    steps: u64,
    best: Vec<usize>,
}

impl FamilySearcher<'_> {
    fn pair_multiplier(&self, lo: &Candidate, hi: &Candidate) -> Option<u64> {
        let lhs = i128::from(hi.m1).checked_mul(i128::from(lo.m0))?;
        let rhs = i128::from(hi.m0).checked_mul(i128::from(lo.m1))?;
        let diff = lhs.checked_sub(rhs)?;
        let c = i128::from(self.m10);
        if diff <= 0 || diff % c != 0 {
            return None;
        }
        let m = u64::try_from(diff / c).ok()?;
        (m <= self.bound && coprime_with_dimension(m, self.d)).then_some(m)
    }

    fn grow(&mut self, chosen: &mut Vec<usize>, open: &[usize]) -> Result<()> {
        self.steps += 1;
        if self.steps > MAX_SEARCH_STEPS {
            return Err(Error::Resource(format!(
                "family search for d = {} with m_bound = {} exceeded {MAX_SEARCH_STEPS} steps",
                self.d, self.bound
            )));
        }
        if chosen.len() > self.best.len() {
            self.best = chosen.clone();
        }
        if self.strategy == SearchStrategy::CongruencePruned {
            let mut classes: Vec<u64> = open.iter().map(|&i| self.candidates[i].chi).collect();
            classes.sort_unstable();
            classes.dedup();
            if chosen.len() + classes.len() <= self.best.len() {
                return Ok(());
            }
        }
        for (pos, &next) in open.iter().enumerate() {
            let chi = self.candidates[next].chi;
            let rest: Vec<usize> = open[pos + 1..]
                .iter()
                .copied()
                .filter(|&i| self.compatible[next][i])
                .filter(|&i| {
                    self.strategy == SearchStrategy::Exhaustive || self.candidates[i].chi != chi
                })
                .collect();
            chosen.push(next);
            self.grow(chosen, &rest)?;
            chosen.pop();
        }
        Ok(())
    }
}

/// Family search with an explicit strategy, returning a witness.
///
/// Rows `j >= 2` are described by `(m_j0, m_j1)`; all higher multipliers are
/// then fixed by the integer relation and must land in `[1, m_bound]` and be
/// coprime with `d`. The result is never silently truncated: a search that
/// grows too large fails with [`Error::Resource`].
pub fn search_max_family_with(d: u64, m_bound: u64, strategy: SearchStrategy) -> Result<FamilySearch> {
    let p = smallest_prime_factor(d)?;
    if m_bound == 0 {
        return Err(Error::Domain("m_bound must be at least 1".into()));
    }
    let admissible: Vec<u64> = (1..=m_bound).filter(|&m| coprime_with_dimension(m, d)).collect();
    if admissible.len().saturating_mul(admissible.len()) > MAX_SEARCH_CANDIDATES {
        return Err(Error::Resource(format!(
            "{} candidate rows for d = {d}, m_bound = {m_bound} (limit {MAX_SEARCH_CANDIDATES})",
            admissible.len() * admissible.len()
        )));
    }

    let mut candidates = Vec::with_capacity(admissible.len() * admissible.len());
    for &m0 in &admissible {
        for &m1 in &admissible {
            let chi = (m0 % p) * mod_inverse(m1, p)? % p;
            candidates.push(Candidate { m0, m1, chi });
        }
    }
    // Order by the ratio m1 / m0: a family needs it strictly increasing in j.
    candidates.sort_by(|a, b| (a.m1 * b.m0).cmp(&(b.m1 * a.m0)).then(a.m0.cmp(&b.m0)));

    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut steps = 0;
    for &m10 in &admissible {
        let mut searcher = FamilySearcher {
            d,
            bound: m_bound,
            m10,
            strategy,
            candidates: &candidates,
            compatible: Vec::new(),
            steps,
            best: best.as_ref().map(|(_, rows)| rows.clone()).unwrap_or_default(),
        };
        let best_before = searcher.best.len();
        searcher.compatible = (0..candidates.len())
            .map(|lo| {
                (0..candidates.len())
                    .map(|hi| lo < hi && searcher.pair_multiplier(&candidates[lo], &candidates[hi]).is_some())
                    .collect()
            })
            .collect();
        let all: Vec<usize> = (0..candidates.len()).collect();
        searcher.grow(&mut Vec::new(), &all)?;
        steps = searcher.steps;
        if best.is_none() || searcher.best.len() > best_before {
            best = Some((m10, searcher.best));
        }
    }

    let (m10, rows) = best.expect("at least m_10 = 1 is admissible");
    let chosen: Vec<Candidate> = rows.iter().map(|&i| candidates[i]).collect();
    let mut matrix = vec![Vec::new(), vec![m10]];
    for (j, hi) in chosen.iter().enumerate() {
        let mut row = vec![hi.m0, hi.m1];
        for lo in &chosen[..j] {
            let diff = hi.m1 * lo.m0 - hi.m0 * lo.m1;
            row.push(diff / m10);
        }
        matrix.push(row);
    }
    let witness = MultiplierMatrix::new(matrix)?;
    debug_assert!(consistent_family(&witness, d));
    Ok(FamilySearch { d, m_bound, max_r: witness.size(), witness, steps })
}
