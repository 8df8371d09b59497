use std::fs;
use std::io::{self, Read};
use std::path::Path;

use num_rational::Ratio;
use serde_json::{json, Value};

use pcg_mum::analysis::{
    apply_background, entropy_sweep, kl_uniform, mixing_fraction_for_leakage, reproduce_tables_for_outcome,
    shannon_entropy, PeriodRange,
};
use pcg_mum::config::{build_symmetric, to_physical, verify_config, MumConfig, PhysicalScale};
use pcg_mum::cvsim::{experiment_beam_width, frft, measure_probs, Simulation};
use pcg_mum::numtheory::{r_max, search_max_family_with, smallest_prime_factor, SearchStrategy};

use crate::output::{Artifact, Meta, Table};
use crate::{usage_error, Command, ConfigSource, FamilyArgs, NoiseArgs, OutputArgs, PhysicalArgs, SimArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] pcg_mum::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("verification failed for {0} direction pair(s)")]
    Verification(usize),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Input(_) => "invalid-input",
            CliError::Verification(_) => "verification-failed",
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Rmax { d, out } => emit(rmax(d)?, &out),
        Command::Search { d, m_bound, exhaustive, out } => emit(search(d, m_bound, exhaustive)?, &out),
        Command::Construct { family, physical, out } => emit(construct(&family, physical)?, &out),
        Command::Verify { config, tol, out } => {
            let cfg = read_config(&config)?;
            let report = verify_config(&cfg, tol);
            let mut table = Table::new(&["j", "k", "implied_m", "nearest_m", "residual", "coprime", "stored_m", "pass"]);
            for p in &report.pairs {
                table.push(vec![
                    p.j.to_string(),
                    p.k.to_string(),
                    p.implied.to_string(),
                    p.nearest.to_string(),
                    p.residual.to_string(),
                    p.coprime.to_string(),
                    p.stored.to_string(),
                    p.pass.to_string(),
                ]);
            }
            let artifact = Artifact {
                kind: "verification",
                meta: Meta::new(Some(&cfg), None),
                data: json!({ "pass": report.pass, "report": report, "config": cfg }),
                table,
            };
            emit(artifact, &out)?;
            match report.failures().count() {
                0 if report.pass => Ok(()),
                n => Err(CliError::Verification(n.max(1))),
            }
        }
        Command::Simulate { source, prep, outcome, measure, noise, sim, physical, state_out, out } => {
            let cfg = load_config(&source)?;
            let scale = scale(physical)?;
            let simulation = simulation(sim, &scale)?;
            let state = simulation.prepare(&cfg, prep, outcome)?;
            let m = measure_probs(&state, &cfg, prep, measure)?;
            let f = noise_fraction(noise, cfg.d())?;
            let p = apply_background(&m.distribution, f)?;
            if let Some(path) = state_out {
                let rotated = frft(&state, cfg.angles()[measure] - cfg.angles()[prep])?;
                rotated.write_csv(fs::File::create(path)?)?;
            }
            let (entropy, kl) = (shannon_entropy(&p), kl_uniform(&p));
            let mut table = Table::new(&["quantity", "outcome", "value"]);
            for (v, x) in p.probs().iter().enumerate() {
                table.push(vec!["probability".into(), v.to_string(), x.to_string()]);
            }
            table.push(vec!["entropy_bits".into(), String::new(), entropy.to_string()]);
            table.push(vec!["kl_bits".into(), String::new(), kl.to_string()]);
            table.push(vec!["truncation_loss".into(), String::new(), m.truncation_loss.to_string()]);
            let data = json!({
                "prepared": prep,
                "outcome": outcome,
                "measured": measure,
                "noise_fraction": f,
                "distribution": p,
                "entropy_bits": entropy,
                "kl_bits": kl,
                "truncation_loss": m.truncation_loss,
            });
            let meta = Meta::new(Some(&cfg), Some(simulation.grid().len())).with_log_base();
            emit(Artifact { kind: "simulation", meta, data, table }, &out)
        }
        Command::Sweep { source, prep, outcome, measure, from, to, step, max_m, sim, physical, out } => {
            let cfg = load_config(&source)?;
            let scale = scale(physical)?;
            let simulation = simulation(sim, &scale)?;
            let range = PeriodRange { from_px: from, to_px: to, step_px: step };
            let result = entropy_sweep(&cfg, &simulation, &scale, (prep, outcome), measure, range, max_m)?;
            let mut table = Table::new(&["period_px", "entropy_bits", "marker_m", "error"]);
            for s in &result.samples {
                table.push(vec![
                    s.period_px.to_string(),
                    s.entropy.map(|h| h.to_string()).unwrap_or_default(),
                    s.marker.map(|m| m.to_string()).unwrap_or_default(),
                    s.error.clone().unwrap_or_default(),
                ]);
            }
            let meta = Meta::new(Some(&cfg), Some(simulation.grid().len())).with_log_base();
            emit(Artifact { kind: "sweep", meta, data: to_value(&result)?, table }, &out)
        }
        Command::Tables { source, outcome, noise, sim, physical, out } => {
            let cfg = load_config(&source)?;
            let scale = scale(physical)?;
            let simulation = simulation(sim, &scale)?;
            let f = noise_fraction(noise, cfg.d())?;
            let tables = reproduce_tables_for_outcome(&cfg, f, &simulation, outcome)?;
            let mut table = Table::new(&["quantity", "prepared", "measured", "value"]);
            for (name, values) in [("entropy_bits", &tables.entropy), ("kl_bits", &tables.kl)] {
                for (j, row) in values.iter().enumerate() {
                    for (k, x) in row.iter().enumerate() {
                        table.push(vec![name.into(), j.to_string(), k.to_string(), x.to_string()]);
                    }
                }
            }
            let meta = Meta::new(Some(&cfg), Some(simulation.grid().len())).with_log_base();
            emit(Artifact { kind: "tables", meta, data: to_value(&tables)?, table }, &out)
        }
    }
}

fn emit(artifact: Artifact, out: &OutputArgs) -> Result<()> {
    artifact.emit(out.format(), out.output.as_deref())?;
    Ok(())
}

fn to_value<T: serde::Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| CliError::Input(e.to_string()))
}

fn rmax(d: u64) -> Result<Artifact> {
    let p = smallest_prime_factor(d)?;
    let r = r_max(d)?;
    let mut table = Table::new(&["d", "smallest_prime_factor", "r_max"]);
    table.push(vec![d.to_string(), p.to_string(), r.to_string()]);
    Ok(Artifact {
        kind: "rmax",
        meta: Meta::new(None, None),
        data: json!({ "d": d, "smallest_prime_factor": p, "r_max": r }),
        table,
    })
}

fn search(d: u64, m_bound: u64, exhaustive: bool) -> Result<Artifact> {
    let strategy = if exhaustive { SearchStrategy::Exhaustive } else { SearchStrategy::CongruencePruned };
    let found = search_max_family_with(d, m_bound, strategy)?;
    let bound = r_max(d)?;
    let mut table = Table::new(&["d", "m_bound", "max_r", "r_max", "steps"]);
    table.push(vec![
        d.to_string(),
        m_bound.to_string(),
        found.max_r.to_string(),
        bound.to_string(),
        found.steps.to_string(),
    ]);
    let data = json!({
        "d": d,
        "m_bound": m_bound,
        "exhaustive": exhaustive,
        "max_r": found.max_r,
        "r_max": bound,
        "witness": found.witness,
        "steps": found.steps,
    });
    Ok(Artifact { kind: "search", meta: Meta::new(None, None), data, table })
}

fn construct(family: &FamilyArgs, physical: PhysicalArgs) -> Result<Artifact> {
    let cfg = build_family(family.d, &family.q, family.r, &family.mcol)?;
    let px = to_physical(&cfg, &scale(physical)?);
    let mut table = Table::new(&["j", "angle_rad", "period", "period_px", "offset", "multipliers"]);
    for (j, period_px) in px.iter().enumerate() {
        let row: Vec<String> = cfg.m_matrix().rows()[j].iter().map(u64::to_string).collect();
        table.push(vec![
            j.to_string(),
            cfg.angles()[j].to_string(),
            cfg.periods()[j].to_string(),
            period_px.to_string(),
            cfg.offsets()[j].to_string(),
            row.join(" "),
        ]);
    }
    Ok(Artifact { kind: "config", meta: Meta::new(Some(&cfg), None), data: to_value(&cfg)?, table })
}

fn build_family(d: u64, q: &str, r: usize, mcol: &[u64]) -> Result<MumConfig> {
    let q: Ratio<i64> = q.trim().parse().map_err(|_| CliError::Input(format!("cannot read Q = {q:?} as a fraction")))?;
    Ok(build_symmetric(d, q, r, mcol)?)
}

fn load_config(source: &ConfigSource) -> Result<MumConfig> {
    if let Some(path) = &source.config {
        return read_config(path);
    }
    match (source.d, &source.q, source.r, &source.mcol) {
        (Some(d), Some(q), Some(r), Some(mcol)) => build_family(d, q, r, mcol),
        _ => usage_error("give either --config or all of --d, --Q, --R and --mcol"),
    }
}

/// Reads a configuration, unwrapping an output envelope if present.
fn read_config(path: &Path) -> Result<MumConfig> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path)?
    };
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("not JSON: {e}")))?;
    let doc = match doc {
        Value::Object(mut m) if m.contains_key("meta") && m.contains_key("data") => m.remove("data").unwrap(),
        bare => bare,
    };
    serde_json::from_value(doc).map_err(|e| CliError::Lib(pcg_mum::Error::InvalidConfig(e.to_string())))
}

fn scale(p: PhysicalArgs) -> Result<PhysicalScale> {
    Ok(PhysicalScale::new(p.wavelength, p.lens_spacing, p.pixel_pitch)?)
}

fn simulation(args: SimArgs, scale: &PhysicalScale) -> Result<Simulation> {
    let width = args.width.unwrap_or_else(|| experiment_beam_width(scale));
    Ok(Simulation::gaussian(args.grid, width)?)
}

fn noise_fraction(noise: NoiseArgs, d: u64) -> Result<f64> {
    match (noise.noise, noise.leakage) {
        (Some(f), _) => Ok(f),
        (None, Some(l)) => Ok(mixing_fraction_for_leakage(l, d)?),
        (None, None) => Ok(0.0),
    }
}
