use std::time::Instant;

use crate::dynamics::{preponderant_extension, propagate, PreponderantExtension, SegmentEnd};
use crate::error::Result;
use crate::memorization::sample_avoiding_end;
use crate::model::PdmpModel;
use crate::par::{map_indexed, try_map_indexed};
use crate::potentials::Potential;
use crate::rng::{stream, Domain};
use crate::state::PathPoint;

use super::resampling::{ess_from_normalized, log_sum_exp, multinomial_resample};
use super::{EstimateReport, Initial, Method, MethodConfig, Problem, StepDiagnostics};

#[derive(Clone, Debug)]
struct Particle {
    point: PathPoint,
    /// Scalar handed from one potential evaluation to the next.
    carried: f64,
    /// Σ log G over the particle's ancestry.
    log_g_sum: f64,
}

impl Particle {
    fn extended(&self, end: SegmentEnd, time: f64) -> Particle {
        Particle {
            point: PathPoint { time, failed: self.point.failed || end.critical_at.is_some(), state: end.end },
            carried: self.carried,
            log_g_sum: self.log_g_sum,
        }
    }
}

fn grid_time(horizon: f64, k: usize, n: usize) -> f64 {
    if k == n {
        horizon
    } else {
        horizon * k as f64 / n as f64
    }
}

fn initial_particles<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, n: usize, seed: u64) -> Vec<Particle> {
    map_indexed(problem.execution, n, |i| {
        let state = match problem.initial {
            Initial::Point(z) => z.clone(),
            Initial::Law(f) => f(&mut stream(seed, Domain::Initial, 0, i as u32)),
        };
        let failed = problem.model.is_critical(&state);
        Particle { point: PathPoint { time: 0.0, state, failed }, carried: 0.0, log_g_sum: 0.0 }
    })
}

fn propagate_all<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, particles: &[Particle], seed: u64, k: usize, t0: f64, t1: f64) -> Result<Vec<Particle>> {
    try_map_indexed(problem.execution, particles.len(), |i| {
        let p = &particles[i];
        let mut rng = stream(seed, Domain::Propagation, k as u32, i as u32);
        let end = propagate(problem.model, &p.point.state, t1 - t0, &mut rng)?;
        Ok(p.extended(end, t1))
    })
}

/// Naive Monte Carlo: mean of h over N independent paths.
pub fn monte_carlo_estimate<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<EstimateReport> {
    config.validate()?;
    let start = Instant::now();
    let n = config.n_particles;
    let init = initial_particles(problem, n, config.seed);
    let end = propagate_all(problem, &init, config.seed, 0, 0.0, problem.horizon)?;
    let sum: f64 = end.iter().map(|p| problem.observable.value(&p.point)).sum();
    let p_hat = sum / n as f64;
    Ok(EstimateReport {
        method: Method::Mc,
        p_hat,
        log_p_hat: p_hat.ln(),
        final_mean: p_hat,
        steps: Vec::new(),
        stopped: false,
        seed: config.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of weighting a sample by G_k.
struct Weighted {
    /// log η_k(G_k), −∞ when every product vanished.
    log_mean: f64,
    /// Normalized candidate weights W̃.
    candidates: Vec<f64>,
    ess: f64,
}

/// Evaluate G_k on every particle, update their running sums and build
/// the normalized candidate weights.
fn weigh(potential: &dyn Potential, particles: &mut [Particle], log_w: &[f64], k: usize) -> Weighted {
    let mut lwg = Vec::with_capacity(particles.len());
    for (p, lw) in particles.iter_mut().zip(log_w) {
        let (lg, carried) = potential.log_potential(k, &p.point, p.carried);
        p.carried = carried;
        p.log_g_sum += lg;
        lwg.push(lw + lg);
    }
    let log_mean = log_sum_exp(&lwg);
    if log_mean == f64::NEG_INFINITY {
        return Weighted { log_mean, candidates: Vec::new(), ess: 0.0 };
    }
    let candidates: Vec<f64> = lwg.iter().map(|v| (v - log_mean).exp()).collect();
    let ess = ess_from_normalized(&candidates);
    Weighted { log_mean, candidates, ess }
}

/// log η_n(f_h) with f_h = h / Π G.
fn log_final_mean<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, particles: &[Particle], log_w: &[f64]) -> f64 {
    let terms: Vec<f64> = particles
        .iter()
        .zip(log_w)
        .filter_map(|(p, lw)| {
            let h = problem.observable.value(&p.point);
            (h > 0.0).then(|| lw + h.ln() - p.log_g_sum)
        })
        .collect();
    log_sum_exp(&terms)
}

fn stopped_report(method: Method, steps: Vec<StepDiagnostics>, seed: u64, start: Instant) -> EstimateReport {
    EstimateReport {
        method,
        p_hat: 0.0,
        log_p_hat: f64::NEG_INFINITY,
        final_mean: 0.0,
        steps,
        stopped: true,
        seed,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

fn finish<M: PdmpModel + ?Sized>(
    problem: &Problem<'_, M>,
    method: Method,
    particles: &[Particle],
    log_w: &[f64],
    log_prod: f64,
    steps: Vec<StepDiagnostics>,
    seed: u64,
    start: Instant,
) -> EstimateReport {
    let log_final = log_final_mean(problem, particles, log_w);
    let log_p_hat = log_prod + log_final;
    EstimateReport {
        method,
        p_hat: log_p_hat.exp(),
        log_p_hat,
        final_mean: log_final.exp(),
        steps,
        stopped: false,
        seed,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Shared loop of IPS and SMC: resample when `ESS ≤ threshold · N`.
fn selection_loop<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig, method: Method, threshold: f64) -> Result<EstimateReport> {
    config.validate()?;
    let start = Instant::now();
    let (n_part, n) = (config.n_particles, config.n_steps);
    let seed = config.seed;
    let mut particles = initial_particles(problem, n_part, seed);
    let mut log_w = vec![-(n_part as f64).ln(); n_part];
    let mut log_prod = 0.0;
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let weighted = weigh(problem.potential, &mut particles, &log_w, k);
        let mut diag = StepDiagnostics {
            step: k,
            sample_size: particles.len(),
            log_potential_mean: weighted.log_mean,
            ess: weighted.ess,
            resampled: false,
            candidate_weight_sum: weighted.candidates.iter().sum(),
            clusters: particles.len(),
            degenerate_clusters: 0,
            propagated: 0,
            weight_sum: 0.0,
        };
        if weighted.log_mean == f64::NEG_INFINITY {
            steps.push(diag);
            return Ok(stopped_report(method, steps, seed, start));
        }
        log_prod += weighted.log_mean;
        let resample = weighted.ess <= threshold * n_part as f64 * (1.0 + 1e-12);
        if resample {
            let counts = multinomial_resample(&weighted.candidates, n_part, &mut stream(seed, Domain::Selection, k as u32, 0));
            diag.clusters = counts.iter().filter(|&&c| c > 0).count();
            let mut selected = Vec::with_capacity(n_part);
            for (p, &c) in particles.iter().zip(&counts) {
                selected.extend(std::iter::repeat_n(p, c).cloned());
            }
            particles = selected;
            log_w = vec![-(n_part as f64).ln(); n_part];
        } else {
            log_w = weighted.candidates.iter().map(|w| w.ln()).collect();
        }
        diag.resampled = resample;
        let (t0, t1) = (grid_time(problem.horizon, k, n), grid_time(problem.horizon, k + 1, n));
        particles = propagate_all(problem, &particles, seed, k, t0, t1)?;
        diag.propagated = particles.len();
        diag.weight_sum = log_w.iter().map(|w| w.exp()).sum();
        steps.push(diag);
    }
    Ok(finish(problem, method, &particles, &log_w, log_prod, steps, seed, start))
}

/// IPS: multinomial selection at every step, then unconditioned propagation.
pub fn ips_run<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<EstimateReport> {
    selection_loop(problem, config, Method::Ips, f64::INFINITY)
}

/// SMC: selection only when the ESS falls to `e · N` or below.
pub fn smc_run<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<EstimateReport> {
    selection_loop(problem, config, Method::Smc, config.ess_threshold)
}

enum Task {
    Preponderant { cluster: usize },
    Avoiding { cluster: usize },
}

/// IPS+M: selection at every step; each cluster spends one replicate on its
/// preponderant extension, weighted by its exact probability, and the
/// others on extensions conditioned to avoid it.
pub fn ipsm_run<M: PdmpModel + ?Sized>(problem: &Problem<'_, M>, config: &MethodConfig) -> Result<EstimateReport> {
    config.validate()?;
    let start = Instant::now();
    let (n_part, n) = (config.n_particles, config.n_steps);
    let seed = config.seed;
    let log_n = (n_part as f64).ln();
    let mut particles = initial_particles(problem, n_part, seed);
    let mut log_w = vec![-log_n; n_part];
    let mut log_prod = 0.0;
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let weighted = weigh(problem.potential, &mut particles, &log_w, k);
        let mut diag = StepDiagnostics {
            step: k,
            sample_size: particles.len(),
            log_potential_mean: weighted.log_mean,
            ess: weighted.ess,
            resampled: true,
            candidate_weight_sum: weighted.candidates.iter().sum(),
            clusters: 0,
            degenerate_clusters: 0,
            propagated: 0,
            weight_sum: 0.0,
        };
        if weighted.log_mean == f64::NEG_INFINITY {
            diag.resampled = false;
            steps.push(diag);
            return Ok(stopped_report(Method::Ipsm, steps, seed, start));
        }
        log_prod += weighted.log_mean;
        let counts = multinomial_resample(&weighted.candidates, n_part, &mut stream(seed, Domain::Selection, k as u32, 0));
        let heads: Vec<usize> = (0..counts.len()).filter(|&j| counts[j] > 0).collect();
        let (t0, t1) = (grid_time(problem.horizon, k, n), grid_time(problem.horizon, k + 1, n));
        let exts: Vec<PreponderantExtension> = try_map_indexed(problem.execution, heads.len(), |c| {
            preponderant_extension(problem.model, &particles[heads[c]].point.state, t1 - t0)
        })?;

        let mut tasks = Vec::with_capacity(n_part + heads.len());
        let mut new_log_w = Vec::with_capacity(n_part + heads.len());
        let mut degenerate = 0;
        for (c, &j) in heads.iter().enumerate() {
            let record = &exts[c].record;
            let share = (counts[j] as f64).ln() - log_n;
            let avoid = record.avoid_mass();
            tasks.push(Task::Preponderant { cluster: c });
            new_log_w.push(record.log_terminal + share);
            // A cluster with nothing to avoid keeps zero-weight copies so the
            // sample size stays Σ (Ñ_j + 1).
            let log_avoid = if avoid > 0.0 { avoid.ln() - log_n } else { f64::NEG_INFINITY };
            if avoid <= 0.0 {
                degenerate += 1;
            }
            for _ in 0..counts[j] {
                tasks.push(Task::Avoiding { cluster: c });
                new_log_w.push(log_avoid);
            }
        }
        let next = try_map_indexed(problem.execution, tasks.len(), |o| {
            let (cluster, preponderant) = match tasks[o] {
                Task::Preponderant { cluster } => (cluster, true),
                Task::Avoiding { cluster } => (cluster, false),
            };
            let parent = &particles[heads[cluster]];
            let ext = &exts[cluster];
            let own = SegmentEnd {
                end: ext.segment.terminal.clone(),
                critical_at: ext.segment.critical_time.map(|c| t0 + c),
                jumps: ext.segment.jumps.len(),
            };
            if preponderant || ext.record.avoid_mass() <= 0.0 {
                return Ok(parent.extended(own, t1));
            }
            let mut rng = stream(seed, Domain::Propagation, k as u32, o as u32);
            sample_avoiding_end(problem.model, ext, &mut rng).map(|end| parent.extended(end, t1))
        })?;
        particles = next;
        log_w = new_log_w;
        diag.clusters = heads.len();
        diag.degenerate_clusters = degenerate;
        diag.propagated = particles.len();
        diag.weight_sum = log_w.iter().map(|w| w.exp()).sum();
        steps.push(diag);
    }
    Ok(finish(problem, Method::Ipsm, &particles, &log_w, log_prod, steps, seed, start))
}
