//! Failure-probability estimators: Monte Carlo, IPS, adaptive SMC and IPS+M.
//!
//! All four share the same problem description and report. Each particle
//! draws from the stream `(seed, step, index)`, and every reduction runs in
//! index order, so a seed fixes the estimate for any thread count.

mod algorithms;
mod resampling;

use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PdmpModel;
use crate::par::Execution;
use crate::potentials::Potential;
use crate::rng::replication_seed;
use crate::state::{PathPoint, State};

pub use algorithms::{ips_run, ipsm_run, monte_carlo_estimate, smc_run};
pub use resampling::{effective_sample_size, log_sum_exp, multinomial_resample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Ips,
    Smc,
    Ipsm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mc => "mc",
            Method::Ips => "ips",
            Method::Smc => "smc",
            Method::Ipsm => "ipsm",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MethodConfig {
    pub method: Method,
    /// Particle count N.
    #[serde(rename = "N")]
    pub n_particles: usize,
    /// Number of subdivisions n of the horizon.
    #[serde(rename = "n", default = "one")]
    pub n_steps: usize,
    /// ESS threshold e, SMC only.
    #[serde(default = "one_f")]
    pub ess_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "R", default = "one")]
    pub replications: usize,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl MethodConfig {
    pub fn new(method: Method, n_particles: usize, n_steps: usize) -> Self {
        MethodConfig { method, n_particles, n_steps, ess_threshold: 1.0, seed: 0, replications: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidParameter(format!("N must be at least 2, got {}", self.n_particles)));
        }
        if self.n_particles > u32::MAX as usize / 2 {
            return Err(Error::InvalidParameter(format!("N={} is too large", self.n_particles)));
        }
        if self.n_steps < 1 || self.n_steps > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("n must be at least 1, got {}", self.n_steps)));
        }
        if !(0.0..=1.0).contains(&self.ess_threshold) {
            return Err(Error::InvalidParameter(format!("essThreshold must lie in [0, 1], got {}", self.ess_threshold)));
        }
        if self.replications < 1 {
            return Err(Error::InvalidParameter("R must be positive".into()));
        }
        Ok(())
    }
}

/// The function h whose expectation at the horizon is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Observable {
    /// 1 if the path visited the critical region by the horizon.
    FailureIndicator,
    Constant { value: f64 },
}

impl Observable {
    pub fn value(&self, point: &PathPoint) -> f64 {
        match *self {
            Observable::FailureIndicator => f64::from(u8::from(point.failed)),
            Observable::Constant { value } => value,
        }
    }
}

/// Law of the initial state.
#[derive(Clone, Copy)]
pub enum Initial<'a> {
    Point(&'a State),
    /// Sampler called with the particle's own stream.
    Law(&'a (dyn Fn(&mut ChaCha8Rng) -> State + Sync)),
}

/// What to estimate and how to run it.
#[derive(Clone, Copy)]
pub struct Problem<'a, M: ?Sized> {
    pub model: &'a M,
    pub potential: &'a dyn Potential,
    pub observable: Observable,
    pub horizon: f64,
    pub initial: Initial<'a>,
    pub execution: Execution,
}

impl<'a, M: PdmpModel + ?Sized> Problem<'a, M> {
    /// Failure probability by the model's horizon from `initial`.
    pub fn new(model: &'a M, potential: &'a dyn Potential, initial: &'a State) -> Self {
        Problem {
            model,
            potential,
            observable: Observable::FailureIndicator,
            horizon: model.horizon(),
            initial: Initial::Point(initial),
            execution: Execution::default(),
        }
    }

    pub fn with_observable(mut self, observable: Observable) -> Self {
        self.observable = observable;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Diagnostics of one selection/propagation step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepDiagnostics {
    pub step: usize,
    /// Size of the weighted sample the potentials were evaluated on.
    pub sample_size: usize,
    /// log η_k(G_k).
    pub log_potential_mean: f64,
    pub ess: f64,
    pub resampled: bool,
    /// Σ of the candidate weights W̃ after normalization.
    pub candidate_weight_sum: f64,
    /// Number of nonempty clusters (IPS+M), or of distinct ancestors.
    pub clusters: usize,
    /// Clusters whose preponderant extension had probability 1.
    pub degenerate_clusters: usize,
    /// Size of the propagated sample.
    pub propagated: usize,
    /// Σ of the weights after propagation.
    pub weight_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateReport {
    pub method: Method,
    pub p_hat: f64,
    pub log_p_hat: f64,
    /// η_n(f_h), the last factor of the estimator.
    pub final_mean: f64,
    pub steps: Vec<StepDiagnostics>,
    /// All potentials vanished at some step.
    pub stopped: bool,
    pub seed: u64,
    pub wall_time: f64,
}

impl EstimateReport {
    pub fn ess_trace(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.ess).collect()
    }

    pub fn step_potential_means(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.log_potential_mean.exp()).collect()
    }

    pub fn resampled_flags(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.resampled).collect()
    }

    pub fn mean_ess(&self) -> Option<f64> {
        (!self.steps.is_empty()).then(|| self.steps.iter().map(|s| s.ess).sum::<f64>() / self.steps.len() as f64)
    }
}

/// Run the method named in `config` once, with `config.seed`.
pub fn estimate<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<EstimateReport> {
    match config.method {
        Method::Mc => monte_carlo_estimate(problem, config),
        Method::Ips => ips_run(problem, config),
        Method::Smc => smc_run(problem, config),
        Method::Ipsm => ipsm_run(problem, config),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Replicated {
    pub mean: f64,
    /// Unbiased sample variance of the estimates.
    pub variance: f64,
    pub reports: Vec<EstimateReport>,
}

impl Replicated {
    pub fn estimates(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.p_hat).collect()
    }

    pub fn mean_ess_per_step(&self) -> Option<f64> {
        let v: Vec<f64> = self.reports.iter().filter_map(EstimateReport::mean_ess).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn wall_time(&self) -> f64 {
        self.reports.iter().map(|r| r.wall_time).sum()
    }
}

/// Sample mean and unbiased variance.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// `config.replications` independent runs; replication `r` uses a seed
/// derived from `(config.seed, r)`.
pub fn replicated_experiment<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<Replicated> {
    config.validate()?;
    if config.replications < 2 {
        return Err(Error::InvalidParameter("replicated experiments need R >= 2".into()));
    }
    let mut reports = Vec::with_capacity(config.replications);
    for r in 0..config.replications {
        let cfg = MethodConfig { seed: replication_seed(config.seed, r as u32), ..config.clone() };
        reports.push(estimate(problem, &cfg)?);
    }
    let (mean, variance) = mean_and_variance(&reports.iter().map(|r| r.p_hat).collect::<Vec<_>>());
    Ok(Replicated { mean, variance, reports })
}
