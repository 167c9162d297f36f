//! Experiment configuration files.
//!
//! ```toml
//! system = "heatedRoom"        # heatedRoom | dam | coldStandby
//! seed = 7
//! workers = 4
//!
//! [heatedRoom]                 # optional overrides of the system defaults
//! tf = 300.0
//!
//! [potential]
//! kind = "uAlpha"
//! alpha = 1.1
//!
//! [[methods]]
//! method = "ipsm"
//! N = 10000
//! n = 10
//! R = 30
//!
//! [output]
//! path = "table1.csv"
//! format = "csv"
//! ```
//!
//! Unknown keys are rejected. Parse errors carry the line and column of the
//! offending key; semantic errors name the line of the table they concern.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use rarepdmp::potentials::PotentialSpec;
use rarepdmp::samplers::{Method, MethodConfig};
use rarepdmp::systems::{ColdStandby, ColdStandbyParams, Dam, DamParams, HeatedRoom, HeatedRoomParams, System};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "camelCase")]
pub enum SystemKind {
    HeatedRoom,
    Dam,
    ColdStandby,
}

impl SystemKind {
    pub fn table(self) -> &'static str {
        match self {
            SystemKind::HeatedRoom => "heatedRoom",
            SystemKind::Dam => "dam",
            SystemKind::ColdStandby => "coldStandby",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

/// One row of the experiment: a method and its budget.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MethodEntry {
    pub method: Method,
    #[serde(rename = "N")]
    pub n_particles: usize,
    #[serde(rename = "n", default = "one")]
    pub n_steps: usize,
    #[serde(default = "one_f")]
    pub ess_threshold: f64,
    #[serde(rename = "R")]
    pub replications: usize,
    /// Defaults to the experiment seed plus the row index.
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub heated_room: Option<HeatedRoomParams>,
    pub dam: Option<DamParams>,
    pub cold_standby: Option<ColdStandbyParams>,
    #[serde(default = "flat_potential")]
    pub potential: PotentialSpec,
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub seed: u64,
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn flat_potential() -> PotentialSpec {
    PotentialSpec::Constant { value: 1.0 }
}

/// Parameters of the selected system, with every default filled in.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum SystemParams {
    HeatedRoom(HeatedRoomParams),
    Dam(DamParams),
    ColdStandby(ColdStandbyParams),
}

impl SystemParams {
    pub fn build(&self) -> rarepdmp::Result<System> {
        Ok(match self {
            SystemParams::HeatedRoom(p) => System::HeatedRoom(HeatedRoom::new(p.clone())?),
            SystemParams::Dam(p) => System::Dam(Dam::new(p.clone())?),
            SystemParams::ColdStandby(p) => System::ColdStandby(ColdStandby::new(p.clone())?),
        })
    }
}

/// A validated experiment, ready to run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub kind: SystemKind,
    pub params: SystemParams,
    pub system: System,
    pub potential: PotentialSpec,
    pub methods: Vec<MethodConfig>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output: OutputConfig,
}

/// 1-based line of the `index`-th header `[name]` or `[[name]]`.
fn table_line(text: &str, name: &str, index: usize) -> Option<usize> {
    let single = format!("[{name}]");
    let array = format!("[[{name}]]");
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            l.starts_with(&single) || l.starts_with(&array)
        })
        .nth(index)
        .map(|(i, _)| i + 1)
}

fn at(text: &str, name: &str, index: usize) -> String {
    match table_line(text, name, index) {
        Some(line) => format!("line {line}, [{name}]"),
        None => format!("[{name}]"),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    pub fn load(path: &Path) -> Result<(ExperimentConfig, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let cfg = Self::parse(&text).with_context(|| format!("invalid configuration {}", path.display()))?;
        Ok((cfg, text))
    }

    /// Validate everything and fill in defaults. `text` is the source, used
    /// to point at lines in error messages.
    pub fn resolve(self, text: &str) -> Result<Resolved> {
        let others: Vec<&str> = [
            (SystemKind::HeatedRoom, self.heated_room.is_some()),
            (SystemKind::Dam, self.dam.is_some()),
            (SystemKind::ColdStandby, self.cold_standby.is_some()),
        ]
        .into_iter()
        .filter(|&(k, present)| present && k != self.system)
        .map(|(k, _)| k.table())
        .collect();
        if let Some(other) = others.first() {
            bail!("{}: table given but system = \"{}\"", at(text, other, 0), self.system.table());
        }
        let params = match self.system {
            SystemKind::HeatedRoom => SystemParams::HeatedRoom(self.heated_room.unwrap_or_default()),
            SystemKind::Dam => SystemParams::Dam(self.dam.unwrap_or_default()),
            SystemKind::ColdStandby => SystemParams::ColdStandby(self.cold_standby.unwrap_or_default()),
        };
        let system = params.build().map_err(|e| anyhow!("{}: {e}", at(text, self.system.table(), 0)))?;
        self.potential.validate().map_err(|e| anyhow!("{}: {e}", at(text, "potential", 0)))?;
        if self.methods.is_empty() {
            bail!("at least one [[methods]] entry is required");
        }
        let mut methods = Vec::with_capacity(self.methods.len());
        for (i, m) in self.methods.iter().enumerate() {
            let cfg = MethodConfig {
                method: m.method,
                n_particles: m.n_particles,
                n_steps: m.n_steps,
                ess_threshold: m.ess_threshold,
                seed: m.seed.unwrap_or(self.seed.wrapping_add(i as u64)),
                replications: m.replications,
            };
            let where_ = at(text, "methods", i);
            cfg.validate().map_err(|e| anyhow!("{where_}: {e}"))?;
            if cfg.replications < 2 {
                bail!("{where_}: R must be at least 2 to estimate a variance");
            }
            methods.push(cfg);
        }
        if self.workers == Some(0) {
            bail!("workers must be positive");
        }
        Ok(Resolved {
            kind: self.system,
            params,
            system,
            potential: self.potential,
            methods,
            seed: self.seed,
            workers: self.workers,
            output: self.output,
        })
    }
}

impl Resolved {
    /// Replace the experiment seed, re-deriving the seeds of rows that did
    /// not set their own.
    pub fn reseed(&mut self, seed: u64, explicit: &[bool]) {
        for (i, (m, &fixed)) in self.methods.iter_mut().zip(explicit).enumerate() {
            if !fixed {
                m.seed = seed.wrapping_add(i as u64);
            }
        }
        self.seed = seed;
    }

    pub fn describe(&self, m: &MethodConfig) -> String {
        let label = match m.method {
            Method::Mc => format!("{} N={}", m.method, m.n_particles),
            _ => format!("{} N={} n={}", m.method, m.n_particles, m.n_steps),
        };
        format!("{} {label} R={}", self.kind.table(), m.replications)
    }
}
