//! Fast oracle checks run by `rarepdmp selfcheck`.

use rarepdmp::dynamics::{jump_distribution, preponderant_extension, sample_jump_time, simulate};
use rarepdmp::memorization::sample_avoiding_extension;
use rarepdmp::model::RateList;
use rarepdmp::oracle::stats::{binomial_sigma, ks_one_sample, ks_two_sample, ks_two_sample_pvalue};
use rarepdmp::oracle::{cold_standby_exact_p, rejection_extend, REJECTION_CAP};
use rarepdmp::potentials::PotentialSpec;
use rarepdmp::rng::{stream, Domain};
use rarepdmp::samplers::{replicated_experiment, Method, MethodConfig, Problem};
use rarepdmp::systems::{Clock, ClockParams, ColdStandby, ColdStandbyParams, Dam, DamParams, HeatedRoom, HeatedRoomParams};
use rarepdmp::{Mode, PdmpModel, State, Status, TransitionTable};

#[derive(Clone, Copy, Debug, Default)]
pub struct Faults {
    /// Scale the heated room's boundary probabilities by 0.99.
    pub kernel_bug: bool,
    /// Replace memorization by rejection sampling.
    pub rejection_fallback: bool,
}

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A model whose boundary kernels lose 1% of their mass.
struct LeakyKernel<M>(M);

impl<M: PdmpModel> PdmpModel for LeakyKernel<M> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn components(&self) -> usize {
        self.0.components()
    }
    fn initial_state(&self) -> State {
        self.0.initial_state()
    }
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }
    fn flow(&self, z: &State, dt: f64) -> State {
        self.0.flow(z, dt)
    }
    fn boundary_hit_time(&self, z: &State) -> f64 {
        self.0.boundary_hit_time(z)
    }
    fn transition_rates(&self, z: &State) -> RateList {
        self.0.transition_rates(z)
    }
    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        self.0.cumulative_rate(z, t)
    }
    fn arrival(&self, departure: &State, target: &Mode) -> State {
        self.0.arrival(departure, target)
    }
    fn boundary_state(&self, z: &State, t_star: f64) -> State {
        self.0.boundary_state(z, t_star)
    }
    fn boundary_kernel(&self, z: &State) -> rarepdmp::Result<TransitionTable> {
        let mut t = self.0.boundary_kernel(z)?;
        for e in &mut t.entries {
            e.1 *= 0.99;
        }
        Ok(t)
    }
    fn is_critical(&self, z: &State) -> bool {
        self.0.is_critical(z)
    }
    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        self.0.critical_entry_time(z, dt)
    }
}

fn check(name: &'static str, result: Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check { name, passed: true, detail },
        Err(detail) => Check { name, passed: false, detail },
    }
}

/// Validate the jump law at every departure of a small corpus.
fn kernel_sums<M: PdmpModel>(model: &M, paths: u32, seed: u64) -> Result<String, String> {
    let mut checked = 0usize;
    for i in 0..paths {
        let mut rng = stream(seed, Domain::Oracle, 0, i);
        let (path, _) = simulate(model, &model.initial_state(), model.horizon(), &mut rng).map_err(|e| e.to_string())?;
        for j in &path.jumps {
            let table = jump_distribution(model, &j.departure).map_err(|e| e.to_string())?;
            table.validate(&j.departure).map_err(|e| format!("{}: {e}", model.name()))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} kernels"))
}

fn semigroup<M: PdmpModel>(model: &M, starts: &[State]) -> Result<String, String> {
    let mut worst = 0.0f64;
    for z in starts {
        for &(s, t) in &[(0.3, 0.7), (1.0, 2.5), (4.0, 0.01)] {
            let a = model.flow(z, s + t);
            let b = model.flow(&model.flow(z, s), t);
            let d = a.x.iter().zip(&b.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
            if d > 1e-9 {
                return Err(format!("{}: flow from {z} differs by {d:e} at s={s}, t={t}", model.name()));
            }
        }
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn atom_mass() -> Result<String, String> {
    let c = Clock::new(ClockParams { rate: 0.2, period: 5.0, ..Default::default() }).map_err(|e| e.to_string())?;
    let z = c.initial_state();
    let draws = 100_000;
    let mut rng = stream(0xA70, Domain::Oracle, 0, 0);
    let mut forced = 0usize;
    let mut interior = Vec::new();
    for _ in 0..draws {
        let j = sample_jump_time(&c, &z, &mut rng).map_err(|e| e.to_string())?;
        if j.forced {
            forced += 1;
        } else {
            interior.push(j.time);
        }
    }
    let p = (-1.0f64).exp();
    let freq = forced as f64 / draws as f64;
    let sigma = binomial_sigma(p, draws);
    let norm = 1.0 - p;
    let d = ks_one_sample(&interior, |t| -(-0.2 * t).exp_m1() / norm);
    let detail = format!("atom {freq:.4} vs {p:.4} (3σ = {:.4}), KS {d:.4}", 3.0 * sigma);
    if (freq - p).abs() <= 3.0 * sigma && d < 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn memorization_vs_rejection(rejection_fallback: bool) -> Result<String, String> {
    let r = HeatedRoom::new(HeatedRoomParams::default()).map_err(|e| e.to_string())?;
    let z = State::new(&[20.0], &[Status::On, Status::Off]);
    let ext = preponderant_extension(&r, &z, 2.0).map_err(|e| e.to_string())?;
    let n = 5000;
    let mut rng = stream(0x3E3, Domain::Oracle, 0, 0);
    let mut first = Vec::with_capacity(n);
    for _ in 0..n {
        let path = if rejection_fallback {
            rejection_extend(&r, &ext, &mut rng, REJECTION_CAP).map_err(|e| e.to_string())?.0
        } else {
            sample_avoiding_extension(&r, &ext, &mut rng).map_err(|e| e.to_string())?.0
        };
        first.push(path.jumps.first().map_or(f64::INFINITY, |j| j.time));
    }
    let mut rng = stream(0x3E3, Domain::Oracle, 1, 0);
    let mut second = Vec::with_capacity(n);
    for _ in 0..n {
        let path = rejection_extend(&r, &ext, &mut rng, REJECTION_CAP).map_err(|e| e.to_string())?.0;
        second.push(path.jumps.first().map_or(f64::INFINITY, |j| j.time));
    }
    let pv = ks_two_sample_pvalue(&first, &second);
    let detail = format!("KS {:.4}, p-value {pv:.3}", ks_two_sample(&first, &second));
    if pv > 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cold_standby_mc() -> Result<String, String> {
    let m = ColdStandby::new(ColdStandbyParams::default()).map_err(|e| e.to_string())?;
    let exact = cold_standby_exact_p(0.1, 10.0);
    let flat = PotentialSpec::Constant { value: 1.0 };
    let z0 = m.initial_state();
    let problem = Problem::new(&m, &flat, &z0);
    let cfg = MethodConfig { seed: 0xC5, replications: 5, ..MethodConfig::new(Method::Mc, 10_000, 1) };
    let rep = replicated_experiment(&problem, &cfg).map_err(|e| e.to_string())?;
    let se = (exact * (1.0 - exact) / (cfg.n_particles * cfg.replications) as f64).sqrt();
    let detail = format!("mean {:.5} vs {exact:.5} (3σ = {:.5})", rep.mean, 3.0 * se);
    if (rep.mean - exact).abs() <= 3.0 * se {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kernels(faults: Faults) -> Result<String, String> {
    let room = HeatedRoom::new(HeatedRoomParams { fail_a: 0.02, gamma: 0.2, tf: 100.0, ..Default::default() }).map_err(|e| e.to_string())?;
    let dam = Dam::new(DamParams { stick_rate: 0.05, ..Default::default() }).map_err(|e| e.to_string())?;
    let cs = ColdStandby::new(ColdStandbyParams::default()).map_err(|e| e.to_string())?;
    let a = if faults.kernel_bug { kernel_sums(&LeakyKernel(room), 200, 1)? } else { kernel_sums(&room, 200, 1)? };
    let b = kernel_sums(&dam, 200, 2)?;
    let c = kernel_sums(&cs, 200, 3)?;
    Ok(format!("{a}, {b}, {c}"))
}

fn flows() -> Result<String, String> {
    let room = HeatedRoom::new(HeatedRoomParams::default()).map_err(|e| e.to_string())?;
    let dam = Dam::new(DamParams::default()).map_err(|e| e.to_string())?;
    let a = semigroup(
        &room,
        &[
            State::new(&[16.0], &[Status::On, Status::Off]),
            State::new(&[24.0], &[Status::Off, Status::Off]),
            State::new(&[20.0], &[Status::Failed, Status::Failed]),
        ],
    )?;
    let b = semigroup(&dam, &[State::new(&[1.0], &[Status::Failed, Status::Failed]), State::new(&[0.0], &[Status::On, Status::Off])])?;
    Ok(format!("room {a}, dam {b}"))
}

pub fn run(faults: Faults) -> Vec<Check> {
    vec![
        check("kernel normalization", kernels(faults)),
        check("flow semigroup", flows()),
        check("jump-time atom and KS", atom_mass()),
        check("memorization vs rejection", memorization_vs_rejection(faults.rejection_fallback)),
        check("cold-standby closed form", cold_standby_mc()),
    ]
}
