//! Result tables and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rarepdmp::dynamics::{BOUNDARY_EPS, JUMP_TIME_TOL};
use rarepdmp::model::QUADRATURE_REL_TOL;
use rarepdmp::oracle::REJECTION_CAP;
use rarepdmp::state::{KERNEL_MASS_TOLERANCE, STATE_TOLERANCE};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, Resolved};
use crate::experiment::{ResultRow, RowResult};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct JsonRow<'a> {
    #[serde(flatten)]
    row: &'a ResultRow,
    p_hat: &'a [f64],
}

pub fn render(rows: &[RowResult], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(&r.row)?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
        Format::Json => {
            let v: Vec<JsonRow> = rows.iter().map(|r| JsonRow { row: &r.row, p_hat: &r.p_hats }).collect();
            let mut bytes = serde_json::to_vec_pretty(&v)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

/// The manifest sits next to the results: `results.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Everything needed to rerun the experiment, including every default.
/// The worker count is left out: it does not affect the results.
pub fn manifest(res: &Resolved, rows: &[RowResult]) -> serde_json::Value {
    let methods: Vec<_> = res
        .methods
        .iter()
        .zip(rows)
        .map(|(m, r)| {
            json!({
                "method": m.method,
                "N": m.n_particles,
                "n": m.n_steps,
                "essThreshold": m.ess_threshold,
                "R": m.replications,
                "seed": m.seed,
                "replicationSeeds": r.replication_seeds,
            })
        })
        .collect();
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "system": res.params,
        "potential": res.potential,
        "seed": res.seed,
        "methods": methods,
        "totalReplications": rows.iter().map(|r| r.replication_seeds.len()).sum::<usize>(),
        "tolerances": {
            "stateTolerance": STATE_TOLERANCE,
            "kernelMassTolerance": KERNEL_MASS_TOLERANCE,
            "quadratureRelTol": QUADRATURE_REL_TOL,
            "jumpTimeTol": JUMP_TIME_TOL,
            "boundaryEps": BOUNDARY_EPS,
            "rejectionCap": REJECTION_CAP,
        },
    })
}

/// An output file opened before any simulation, so a bad path fails fast.
pub struct Sink {
    path: PathBuf,
    file: BufWriter<File>,
}

impl Sink {
    pub fn create(path: &Path) -> Result<Sink> {
        let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(Sink { path: path.to_path_buf(), file: BufWriter::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn finish(mut self, bytes: &[u8]) -> Result<()> {
        self.file.write_all(bytes)?;
        self.file.flush().with_context(|| format!("cannot write {}", self.path.display()))
    }
}

pub fn write_manifest(out: &Path, res: &Resolved, rows: &[RowResult]) -> Result<PathBuf> {
    let path = manifest_path(out);
    let mut bytes = serde_json::to_vec_pretty(&manifest(res, rows))?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
