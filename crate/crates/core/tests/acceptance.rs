//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};

use pcg_mum::analysis::{
    apply_background, entropy_sweep, kl_uniform, mixing_fraction_for_leakage, reproduce_tables, shannon_entropy,
    EntropyTables, PeriodRange,
};
use pcg_mum::config::{build_symmetric, to_physical, verify_config, MumConfig, PhysicalScale};
use pcg_mum::cvsim::{
    direction_mask, fourier_transform, frft, gaussian_state, BinMask, Grid, GridState, OutcomeDistribution,
    Simulation,
};
use pcg_mum::numtheory::{r_max, search_max_family};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn experiment_config() -> MumConfig {
    build_symmetric(3, Ratio::new(1, 1), 4, &[1, 2, 1]).expect("experiment configuration")
}

fn simulation() -> &'static Simulation {
    static SIM: OnceLock<Simulation> = OnceLock::new();
    SIM.get_or_init(|| Simulation::experiment().expect("experiment simulation"))
}

fn noiseless_tables() -> &'static EntropyTables {
    static TABLES: OnceLock<EntropyTables> = OnceLock::new();
    TABLES.get_or_init(|| reproduce_tables(&experiment_config(), 0.0, simulation()).expect("tables"))
}

fn smallest_factor_by_division(d: u64) -> u64 {
    (2..=d).find(|q| d.is_multiple_of(*q)).unwrap()
}

fn bound_formula() -> Check {
    for d in 2..=200u64 {
        let got = r_max(d).map_err(|e| e.to_string())?;
        let want = smallest_factor_by_division(d) + 1;
        ensure(got == want, || format!("r_max({d}) = {got}, expected {want}"))?;
    }
    let cases = [(3, 4), (4, 3), (9, 4)];
    for (d, want) in cases {
        ensure(r_max(d) == Ok(want), || format!("r_max({d}) != {want}"))?;
    }
    Ok("r_max(d) = p + 1 for d = 2..200; r_max(3,4,9) = 4,3,4".into())
}

fn brute_force_search() -> Check {
    let mut found = Vec::new();
    for d in [2u64, 3, 4, 5, 6, 7, 8, 9, 10, 12] {
        let r = search_max_family(d, 8).map_err(|e| format!("d = {d}: {e}"))?;
        let bound = r_max(d).unwrap() as usize;
        ensure(r == bound, || format!("d = {d}: search found R = {r}, bound is {bound}"))?;
        found.push(format!("{d}:{r}"));
    }
    Ok(format!("m_bound = 8, max R per d = {}", found.join(" ")))
}

fn construction() -> Check {
    let cfg = experiment_config();
    let m = cfg.m_matrix();
    ensure(m.get(2, 1) == 1 && m.get(3, 2) == 1 && m.get(2, 0) == 2, || format!("multipliers {:?}", m.rows()))?;
    let report = verify_config(&cfg, 1e-9);
    ensure(report.pass, || format!("verification failed: {:?}", report.failures().collect::<Vec<_>>()))?;
    let worst = report.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    ensure(worst < 1e-9, || format!("residual {worst:e}"))?;
    Ok(format!("m21 = m32 = 1, m20 = 2, verify passes, max residual {worst:.1e}"))
}

fn physical_scaling() -> Check {
    let px = to_physical(&experiment_config(), &PhysicalScale::default());
    let d0 = (px[0] - 92.7476).abs();
    let d1 = (px[1] - 131.165).abs();
    let detail = format!("T'0 = {:.4} px (off {d0:.4}), T'1 = {:.4} px (off {d1:.4})", px[0], px[1]);
    ensure(d0 <= 0.01 && d1 <= 0.01, || detail.clone())?;
    Ok(detail)
}

fn frft_properties() -> Check {
    let grid = Grid::new(4096).unwrap();
    let cfg = experiment_config();
    let gaussian = gaussian_state(grid, 7.43, 0.0).map_err(|e| e.to_string())?;
    let masked = pcg_mum::cvsim::prepare(&gaussian, &cfg, 0, 0).map_err(|e| e.to_string())?;
    let (mut unitarity, mut additivity, mut fourier) = (0.0f64, 0.0f64, 0.0f64);
    for state in [&gaussian, &masked] {
        for theta in [0.3, FRAC_PI_4, 1.9, -2.5, PI] {
            unitarity = unitarity.max((frft(state, theta).unwrap().norm() - state.norm()).abs());
        }
        for (a, b) in [(0.3, 0.9), (FRAC_PI_4, FRAC_PI_4), (1.2, -2.0), (2.0, 2.5)] {
            let two = frft(&frft(state, a).unwrap(), b).unwrap();
            additivity = additivity.max(two.distance(&frft(state, a + b).unwrap()));
        }
        fourier = fourier.max(frft(state, FRAC_PI_2).unwrap().distance(&fourier_transform(state)));
    }
    ensure(unitarity <= 1e-9, || format!("unitarity residual {unitarity:e}"))?;
    ensure(additivity <= 1e-6, || format!("additivity error {additivity:e}"))?;
    ensure(fourier <= 1e-6, || format!("quarter turn vs Fourier transform {fourier:e}"))?;

    let small = Grid::new(256).unwrap();
    let mut oracle = 0.0f64;
    let states = [
        gaussian_state(small, 1.5, 1.0).unwrap(),
        gaussian_state(small, 0.8, -0.5).unwrap(),
        GridState::from_fn(small, |q| Complex64::new(0.0, 0.7 * q).exp() * (-(q - 0.4).powi(2) / 2.0).exp())
            .unwrap()
            .normalized()
            .unwrap(),
    ];
    for state in &states {
        for theta in [0.4, FRAC_PI_2, 2.1, -1.3] {
            let want = common::hermite::rotate(state, theta, 120);
            oracle = oracle.max(frft(state, theta).unwrap().distance(&want));
        }
    }
    ensure(oracle <= 1e-6, || format!("Hermite oracle disagreement {oracle:e}"))?;
    Ok(format!(
        "N = 4096: unitarity {unitarity:.1e}, additivity {additivity:.1e}, quarter turn {fourier:.1e}; \
         N = 256 Hermite oracle {oracle:.1e}"
    ))
}

fn mum_simulation() -> Check {
    let cfg = experiment_config();
    let tables = noiseless_tables();
    let mut floor = f64::INFINITY;
    for j in 0..4 {
        for k in (0..4).filter(|&k| k != j) {
            floor = floor.min(tables.entropy[j][k]);
            ensure(tables.entropy[j][k] >= 1.5840, || format!("H[{j}][{k}] = {:.5}", tables.entropy[j][k]))?;
        }
    }
    let sim = simulation();
    for j in 0..4 {
        for u in 0..3 {
            let m = sim.prepare_and_measure(&cfg, j, u, j).map_err(|e| e.to_string())?;
            let p = m.distribution.probs()[u];
            ensure(p >= 1.0 - 1e-9, || format!("diagonal ({j}, u = {u}) gives p = {p}"))?;
        }
    }
    let f = mixing_fraction_for_leakage(0.02, 3).unwrap();
    let mut diag = Vec::new();
    for j in 0..4 {
        let noisy = apply_background(&tables.distributions[j][j], f).unwrap();
        let h = shannon_entropy(&noisy);
        ensure((0.13..=0.19).contains(&h), || format!("noisy diagonal {j}: {h:.4} bits"))?;
        diag.push(h);
    }
    Ok(format!(
        "off-diagonal min {floor:.5} bits; diagonals sharp; 2% noise diagonals {:.4}..{:.4} bits",
        diag.iter().cloned().fold(f64::INFINITY, f64::min),
        diag.iter().cloned().fold(0.0, f64::max)
    ))
}

fn kl_check() -> Check {
    let tables = noiseless_tables();
    let mut worst = 0.0f64;
    for j in 0..4 {
        for k in (0..4).filter(|&k| k != j) {
            worst = worst.max(tables.kl[j][k]);
        }
    }
    ensure(worst <= 1.3e-3, || format!("largest off-diagonal KL {worst:e} bits"))?;
    Ok(format!("largest off-diagonal KL {worst:.2e} bits"))
}

fn period_sweep() -> Check {
    let cfg = experiment_config();
    let scale = PhysicalScale::default();
    let mut lines = Vec::new();
    for j in [0, 1, 3] {
        let sweep = entropy_sweep(&cfg, simulation(), &scale, (j, 0), 2, PeriodRange::pixels(20.0, 200.0), 4)
            .map_err(|e| e.to_string())?;
        let at = |m: u64| -> Result<f64, String> {
            let s = sweep.sample_at_marker(m).ok_or(format!("no sample at marker {m}"))?;
            s.entropy.ok_or(format!("gap at marker {m}: {:?}", s.error))
        };
        let allowed = [at(1)?, at(2)?, at(4)?];
        let forbidden = at(3)?;
        for (m, h) in [1, 2, 4].iter().zip(allowed) {
            ensure(h >= 1.58, || format!("j = {j}, m = {m}: {h:.5} bits"))?;
        }
        let drop = at(2)?.min(at(4)?) - forbidden;
        ensure(drop >= 0.1, || format!("j = {j}: m = 3 dip only {drop:.4} bits"))?;
        lines.push(format!("j={j} dip {drop:.2}"));
    }
    Ok(format!("allowed markers >= 1.58 bits, m = 3 dips: {}", lines.join(", ")))
}

fn property_suites() -> Check {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let cfg = experiment_config();
    let mut masks: Vec<BinMask> = (0..4).map(|j| direction_mask(&cfg, j).unwrap()).collect();
    for _ in 0..4 {
        masks.push(
            BinMask::new(rng.gen_range(0.5..20.0), rng.gen_range(2..8), rng.gen_range(-10.0..10.0)).unwrap(),
        );
    }
    for mask in &masks {
        for _ in 0..100_000 {
            let q: f64 = rng.gen_range(-200.0..200.0);
            let hits: u32 = (0..mask.bins()).map(|u| u32::from(mask.value(q, u))).sum();
            ensure(hits == 1, || format!("q = {q} lies in {hits} bins of {mask:?}"))?;
        }
    }
    for row in &noiseless_tables().distributions {
        for p in row {
            let total: f64 = p.probs().iter().sum();
            ensure((total - 1.0).abs() <= 1e-9, || format!("distribution sums to {total}"))?;
        }
    }
    ensure(OutcomeDistribution::new(vec![0.5, 0.6]).is_err(), || "unnormalized distribution accepted".into())?;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let d = rng.gen_range(2..10);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let p = OutcomeDistribution::from_weights(w).unwrap();
        let h = shannon_entropy(&p);
        ensure(h >= 0.0 && h <= (d as f64).log2() + 1e-12, || format!("entropy {h} out of range"))?;
        worst = worst.max((kl_uniform(&p) - ((d as f64).log2() - h)).abs());
    }
    ensure(worst <= 1e-12, || format!("KL identity error {worst:e}"))?;
    Ok(format!("{} masks x 1e5 points partition; sums within 1e-9; KL identity {worst:.1e}", masks.len()))
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "bound formula", bound_formula),
        (2, "brute-force search", brute_force_search),
        (3, "symmetric construction", construction),
        (4, "physical scaling", physical_scaling),
        (5, "fractional Fourier transform", frft_properties),
        (6, "unbiased measurement simulation", mum_simulation),
        (7, "divergence from uniform", kl_check),
        (8, "entropy versus period", period_sweep),
        (9, "property suites", property_suites),
    ];
    let mut failed = Vec::new();
    for (n, name, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{elapsed:.1}s]"),
            Err(detail) => {
                println!("FAIL criterion {n} ({name}): {detail} [{elapsed:.1}s]");
                failed.push(n);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
