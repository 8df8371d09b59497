use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use pcg_mum::config::MumConfig;

pub const TOOL: &str = "pcgmum";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance carried by every artifact.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: Option<String>,
    pub grid_size: Option<usize>,
    /// Logarithm base of entropies and divergences, when there are any.
    pub log_base: Option<u32>,
}

impl Meta {
    pub fn new(config: Option<&MumConfig>, grid_size: Option<usize>) -> Self {
        Self { tool: TOOL, version: VERSION, config_hash: config.map(config_hash), grid_size, log_base: None }
    }

    pub fn with_log_base(mut self) -> Self {
        self.log_base = Some(2);
        self
    }
}

/// SHA-256 of the canonical JSON form of a configuration.
pub fn config_hash(config: &MumConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("configurations serialize");
    format!("sha256:{}", hex::encode(Sha256::digest(canonical)))
}

/// Rows for the CSV form of an artifact.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: String,
    meta: &'a Meta,
    data: &'a Value,
}

pub struct Artifact {
    pub kind: &'static str,
    pub meta: Meta,
    pub data: Value,
    pub table: Table,
}

impl Artifact {
    pub fn schema(&self) -> String {
        format!("pcg-mum/{}/v1", self.kind)
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                let doc = Envelope { schema: self.schema(), meta: &self.meta, data: &self.data };
                serde_json::to_writer_pretty(&mut *out, &doc)?;
                writeln!(out)
            }
            Format::Csv => {
                writeln!(out, "# tool: {} {}", self.meta.tool, self.meta.version)?;
                writeln!(out, "# schema: {}", self.schema())?;
                writeln!(out, "# config_hash: {}", self.meta.config_hash.as_deref().unwrap_or("none"))?;
                match self.meta.grid_size {
                    Some(n) => writeln!(out, "# grid_size: {n}")?,
                    None => writeln!(out, "# grid_size: none")?,
                }
                if let Some(base) = self.meta.log_base {
                    writeln!(out, "# log_base: {base}")?;
                }
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&self.table.header)?;
                for row in &self.table.rows {
                    w.write_record(row)?;
                }
                w.flush()
            }
        }
    }

    pub fn emit(&self, format: Format, path: Option<&Path>) -> io::Result<()> {
        match path {
            Some(p) => {
                let mut file = BufWriter::new(File::create(p)?);
                self.write(format, &mut file)?;
                file.flush()
            }
            None => self.write(format, &mut io::stdout().lock()),
        }
    }
}
