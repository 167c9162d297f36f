//! Replicated runs of every configured method.

use std::time::Instant;

use anyhow::{Context, Result};
use rarepdmp::rng::replication_seed;
use rarepdmp::samplers::{replicated_experiment, Method, MethodConfig, Problem, Replicated};
use rarepdmp::{Execution, PdmpModel};
use serde::Serialize;

use crate::config::Resolved;

/// One line of the result table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub system: String,
    pub method: Method,
    #[serde(rename = "N")]
    pub n_particles: usize,
    #[serde(rename = "n")]
    pub n_steps: usize,
    #[serde(rename = "alphaParams")]
    pub alpha_params: String,
    #[serde(rename = "R")]
    pub replications: usize,
    #[serde(rename = "meanPHat")]
    pub mean_p_hat: f64,
    #[serde(rename = "empiricalVariance")]
    pub empirical_variance: f64,
    #[serde(rename = "meanESSperStep")]
    pub mean_ess_per_step: Option<f64>,
    #[serde(rename = "wallTimeSeconds")]
    pub wall_time_seconds: Option<f64>,
    pub seed: u64,
}

/// A row together with its per-replication estimates.
#[derive(Clone, Debug)]
pub struct RowResult {
    pub row: ResultRow,
    pub p_hats: Vec<f64>,
    pub replication_seeds: Vec<u64>,
}

/// Worker count: the flag, else the config, else the environment, else
/// all cores.
pub fn worker_count(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(w) = flag.or(config) {
        anyhow::ensure!(w > 0, "workers must be positive");
        return Ok(w);
    }
    if let Ok(v) = std::env::var(crate::WORKERS_ENV) {
        let w: usize = v.trim().parse().with_context(|| format!("{}={v} is not a worker count", crate::WORKERS_ENV))?;
        anyhow::ensure!(w > 0, "{} must be positive", crate::WORKERS_ENV);
        return Ok(w);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn replication_seeds(m: &MethodConfig) -> Vec<u64> {
    (0..m.replications).map(|r| replication_seed(m.seed, r as u32)).collect()
}

/// Run every method row on a pool of `workers` threads.
///
/// Wall times are only recorded when `timing` is set, so that the default
/// output depends on nothing but the configuration.
pub fn run_all(res: &Resolved, workers: usize, timing: bool, quiet: bool) -> Result<Vec<RowResult>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("cannot start the worker pool")?;
    let z0 = res.system.initial_state();
    let problem = Problem::new(&res.system, &res.potential, &z0).with_execution(Execution::Parallel);
    let mut out = Vec::with_capacity(res.methods.len());
    for (i, m) in res.methods.iter().enumerate() {
        if !quiet {
            eprintln!("[{}/{}] {}", i + 1, res.methods.len(), res.describe(m));
        }
        let start = Instant::now();
        let rep: Replicated = pool
            .install(|| replicated_experiment(&problem, m))
            .with_context(|| format!("method row {} ({})", i + 1, m.method))?;
        let elapsed = start.elapsed().as_secs_f64();
        if !quiet {
            eprintln!("      mean {:.4e}  variance {:.4e}  ({elapsed:.1} s)", rep.mean, rep.variance);
        }
        let row = ResultRow {
            system: res.kind.table().to_string(),
            method: m.method,
            n_particles: m.n_particles,
            n_steps: m.n_steps,
            alpha_params: res.potential.label(),
            replications: m.replications,
            mean_p_hat: rep.mean,
            empirical_variance: rep.variance,
            mean_ess_per_step: match m.method {
                Method::Mc => None,
                _ => rep.mean_ess_per_step(),
            },
            wall_time_seconds: timing.then_some(elapsed),
            seed: m.seed,
        };
        out.push(RowResult { row, p_hats: rep.estimates(), replication_seeds: replication_seeds(m) });
    }
    Ok(out)
}
