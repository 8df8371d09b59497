//! `pcgmum`: bounds, construction, verification and simulation of mutually
//! unbiased periodic coarse-grained measurements.
//!
//! Every subcommand writes one artifact, as CSV (with `#` metadata lines) or
//! as a JSON envelope `{schema, meta, data}`. Domain errors exit with status 1
//! and a JSON error on stderr; usage errors exit with status 2.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "pcgmum", version, about = "Mutually unbiased periodic coarse-grained measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Largest number of mutually unbiased measurements for dimension d.
    Rmax {
        #[arg(long)]
        d: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Brute-force search for the largest consistent multiplier family.
    Search {
        #[arg(long)]
        d: u64,
        /// Upper bound on every multiplier.
        #[arg(long, default_value_t = 8)]
        m_bound: u64,
        /// Disable congruence pruning.
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build the symmetric configuration with tan(theta) = sqrt(Q).
    Construct {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check a configuration file (bare or inside an output envelope).
    Verify {
        /// Path to the configuration, or `-` for standard input.
        #[arg(long)]
        config: PathBuf,
        /// Relative tolerance for integer multipliers.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Prepare one outcome and measure another direction.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        prep: usize,
        #[arg(long, default_value_t = 0)]
        outcome: usize,
        #[arg(long)]
        measure: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
        /// Also write the measured-frame wavefunction as CSV (q, re, im, abs2).
        #[arg(long)]
        state_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Entropy of one direction while its period is scanned.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        prep: usize,
        #[arg(long, default_value_t = 0)]
        outcome: usize,
        #[arg(long)]
        measure: usize,
        /// First period, in pixels.
        #[arg(long)]
        from: f64,
        /// Last period, in pixels.
        #[arg(long)]
        to: f64,
        /// Period step, in pixels.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Largest multiplier marked on the scan.
        #[arg(long, default_value_t = 4)]
        max_m: u64,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Entropy and divergence tables for all prepare/measure pairs.
    Tables {
        #[command(flatten)]
        source: ConfigSource,
        /// Prepared outcome in every row.
        #[arg(long, default_value_t = 0)]
        outcome: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        physical: PhysicalArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv", conflicts_with_all = ["json", "csv"])]
    format: Format,
    /// Shorthand for --format json.
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Shorthand for --format csv.
    #[arg(long)]
    csv: bool,
    /// Write to a file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            self.format
        }
    }
}

#[derive(Debug, Clone, Args)]
struct FamilyArgs {
    #[arg(long)]
    d: u64,
    /// tan(theta)^2 as an integer or fraction, e.g. 1 or 1/3.
    #[arg(long = "Q")]
    q: String,
    /// Number of directions.
    #[arg(long = "R")]
    r: usize,
    /// Multipliers m_10, m_20, ... against direction 0.
    #[arg(long, value_delimiter = ',', required = true)]
    mcol: Vec<u64>,
}

/// A configuration file, or the parameters of a symmetric construction.
#[derive(Debug, Clone, Args)]
struct ConfigSource {
    /// Configuration file, or `-` for standard input.
    #[arg(long, conflicts_with_all = ["d", "q", "r", "mcol"])]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long = "Q")]
    q: Option<String>,
    #[arg(long = "R")]
    r: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    mcol: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, Args)]
struct PhysicalArgs {
    /// Wavelength in metres.
    #[arg(long, default_value_t = 632.9e-9)]
    wavelength: f64,
    /// Distance between lenses in metres.
    #[arg(long, default_value_t = 0.29)]
    lens_spacing: f64,
    /// Modulator pixel pitch in metres.
    #[arg(long, default_value_t = 8e-6)]
    pixel_pitch: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct SimArgs {
    /// Grid samples, a power of two.
    #[arg(long, default_value_t = pcg_mum::cvsim::DEFAULT_GRID_LEN)]
    grid: usize,
    /// Dimensionless Gaussian width; defaults to the illuminating beam.
    #[arg(long)]
    width: Option<f64>,
}

#[derive(Debug, Clone, Copy, Args)]
struct NoiseArgs {
    /// Uniform background mixing fraction f, in [0, 1].
    #[arg(long, conflicts_with = "leakage")]
    noise: Option<f64>,
    /// Probability leaking out of a sharp outcome; converted to f.
    #[arg(long)]
    leakage: Option<f64>,
}

fn usage_error(message: &str) -> ! {
    Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, message).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::from(1)
        }
    }
}
