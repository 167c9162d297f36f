use proptest::prelude::*;
use rarepdmp::dynamics::{preponderant_extension, simulate, PreponderantExtension};
use rarepdmp::memorization::{
    differentiation_time, hazard_level, locate, sample_avoiding_extension, sample_differentiation_time, Located,
};
use rarepdmp::oracle::rejection_extend;
use rarepdmp::oracle::stats::{binomial_sigma, ks_one_sample, ks_two_sample};
use rarepdmp::rng::{stream, Domain};
use rarepdmp::systems::{Clock, ClockParams, HeatedRoom, HeatedRoomParams};
use rarepdmp::{Error, PdmpModel, State, Status};

fn room() -> HeatedRoom {
    HeatedRoom::new(HeatedRoomParams::default()).unwrap()
}

/// log F̃(s) and log F̃(s⁻) of a preponderant extension.
fn log_survival<M: PdmpModel>(model: &M, ext: &PreponderantExtension, s: f64) -> (f64, f64) {
    let bps = &ext.record.breakpoints;
    if let Some(b) = bps.iter().find(|b| b.time == s) {
        return (b.log_post, b.log_pre);
    }
    let k = bps.iter().filter(|b| b.time < s).count();
    let (start, base) = if k == 0 { (0.0, 0.0) } else { (bps[k - 1].time, bps[k - 1].log_post) };
    let v = base - model.cumulative_rate(ext.interval_start(k), s - start);
    (v, v)
}

#[test]
fn constant_rate_tau_has_the_truncated_exponential_law() {
    let c = Clock::new(ClockParams { rate: 0.3, period: f64::INFINITY, ..Default::default() }).unwrap();
    let ext = preponderant_extension(&c, &c.initial_state(), 5.0).unwrap();
    assert!((ext.probability - (-1.5f64).exp()).abs() < 1e-15);
    let mut rng = stream(20, Domain::Oracle, 0, 0);
    let taus: Vec<f64> = (0..100_000).map(|_| sample_differentiation_time(&c, &ext, &mut rng).unwrap().tau).collect();
    assert!(taus.iter().all(|&t| t > 0.0 && t <= 5.0));
    let norm = -(-1.5f64).exp_m1();
    let d = ks_one_sample(&taus, |t| -(-0.3 * t).exp_m1() / norm);
    assert!(d < 0.01, "KS {d}");
}

/// F̃ drops from 1 to 0.99 before the reset at t = 1, to 0.5 across it, then stays flat.
fn gap_clock() -> Clock {
    Clock::new(ClockParams { rate: -(0.99f64).ln(), period: 1.0, gamma: 1.0 - 0.5 / 0.99, restart: false, tf: 3.0 }).unwrap()
}

#[test]
fn mass_across_a_discontinuity_goes_to_the_boundary_jump() {
    let c = gap_clock();
    let ext = preponderant_extension(&c, &c.initial_state(), 3.0).unwrap();
    let b = &ext.record.breakpoints[0];
    assert!((b.pre() - 0.99).abs() < 1e-12 && (b.post() - 0.5).abs() < 1e-12);
    assert!((ext.probability - 0.5).abs() < 1e-12);
    let draws = 100_000;
    let mut rng = stream(21, Domain::Oracle, 0, 0);
    let mut at_jump = 0usize;
    for _ in 0..draws {
        let d = sample_differentiation_time(&c, &ext, &mut rng).unwrap();
        if d.at_boundary_jump {
            assert_eq!(d.tau, 1.0);
            at_jump += 1;
        } else {
            assert!(d.tau < 1.0);
        }
    }
    let p = (0.99 - 0.5) / (1.0 - 0.5);
    let freq = at_jump as f64 / draws as f64;
    assert!((freq - p).abs() < 3.0 * binomial_sigma(p, draws), "{freq} vs {p}");
}

#[test]
fn only_avoidance_opportunity_is_the_boundary_jump() {
    let c = Clock::new(ClockParams { rate: 0.0, period: 2.0, gamma: 0.1, restart: false, tf: 5.0 }).unwrap();
    let ext = preponderant_extension(&c, &c.initial_state(), 5.0).unwrap();
    let mut rng = stream(22, Domain::Oracle, 0, 0);
    for _ in 0..1000 {
        let (path, d) = sample_avoiding_extension(&c, &ext, &mut rng).unwrap();
        assert!(d.at_boundary_jump && d.tau == 2.0);
        assert!(c.is_critical(&path.terminal));
    }
}

#[test]
fn deterministic_segment_is_a_degenerate_record() {
    let c = Clock::new(ClockParams { rate: 0.0, period: 2.0, gamma: 0.0, tf: 5.0, ..Default::default() }).unwrap();
    let ext = preponderant_extension(&c, &c.initial_state(), 5.0).unwrap();
    assert_eq!(ext.probability, 1.0);
    let mut rng = stream(23, Domain::Oracle, 0, 0);
    assert!(matches!(sample_avoiding_extension(&c, &ext, &mut rng), Err(Error::DegenerateRecord(_))));
}

#[test]
fn differentiation_time_brackets_the_uniform() {
    let r = room();
    let ext = preponderant_extension(&r, &r.initial_state(), 40.0).unwrap();
    let terminal = ext.record.terminal();
    for i in 1..2000 {
        let w = i as f64 / 2000.0;
        let u = 1.0 - (1.0 - terminal) * w;
        let d = differentiation_time(&r, &ext, w).unwrap();
        let (after, before) = log_survival(&r, &ext, d.tau);
        assert!(before.exp() >= u - 1e-9, "F(tau-) = {} < U = {u}", before.exp());
        assert!(after.exp() <= u + 1e-9, "F(tau) = {} > U = {u}", after.exp());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_survival_is_monotone(a in 1e-9f64..1.0, b in 1e-9f64..1.0, x0 in 15.5f64..24.5) {
        let r = room();
        let z = State::new(&[x0], &[Status::On, Status::Off]);
        let ext = preponderant_extension(&r, &z, 60.0).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // Larger w means smaller Ũ, hence a later departure.
        let t_lo = differentiation_time(&r, &ext, lo).unwrap().tau;
        let t_hi = differentiation_time(&r, &ext, hi).unwrap().tau;
        prop_assert!(t_lo <= t_hi + 1e-9);
        let key = |l: Located| match l {
            Located::Interval { k, hazard } => (2 * k, hazard),
            Located::Jump { k } => (2 * k + 1, 0.0),
        };
        let (kl, kh) = (key(locate(&ext.record, hazard_level(&ext.record, lo))), key(locate(&ext.record, hazard_level(&ext.record, hi))));
        prop_assert!(kl.0 < kh.0 || (kl.0 == kh.0 && kl.1 <= kh.1 + 1e-12));
    }
}

#[test]
fn conditioned_boundary_tables_renormalize() {
    let r = HeatedRoom::new(HeatedRoomParams { gamma: 0.3, ..Default::default() }).unwrap();
    let z = State::new(&[15.0], &[Status::Off, Status::Off]);
    let full = r.boundary_kernel(&z).unwrap();
    let cond = full.excluding(full.nominal.unwrap()).unwrap();
    assert!((cond.total_mass() - 1.0).abs() < 1e-12);
    assert_eq!(cond.entries.len(), full.entries.len() - 1);
}

#[test]
fn avoiding_draws_never_reproduce_the_preponderant_path() {
    let r = room();
    let ext = preponderant_extension(&r, &r.initial_state(), 30.0).unwrap();
    let mut rng = stream(24, Domain::Oracle, 0, 0);
    for _ in 0..100_000 {
        let (path, d) = sample_avoiding_extension(&r, &ext, &mut rng).unwrap();
        assert!(!path.same_path(&ext.segment));
        assert!(d.tau > 0.0 && d.tau <= 30.0);
    }
}

#[test]
fn memorization_agrees_with_rejection_on_a_single_interval() {
    // Heating from 20 reaches 25 after about 2.2 h: no forced jump within 2 h.
    let r = room();
    let z = State::new(&[20.0], &[Status::On, Status::Off]);
    let ext = preponderant_extension(&r, &z, 2.0).unwrap();
    assert!(ext.segment.jumps.is_empty());
    let n = 10_000;
    let mut rng = stream(25, Domain::Oracle, 0, 0);
    let memo: Vec<f64> = (0..n).map(|_| sample_avoiding_extension(&r, &ext, &mut rng).unwrap().0.jumps[0].time).collect();
    let mut rng = stream(25, Domain::Oracle, 1, 0);
    let rej: Vec<f64> = (0..n).map(|_| rejection_extend(&r, &ext, &mut rng, 10_000_000).unwrap().0.jumps[0].time).collect();
    let d = ks_two_sample(&memo, &rej);
    assert!(d < 0.02, "KS {d}");
}

#[test]
fn mixture_with_the_preponderant_path_reconstructs_the_jump_count_law() {
    let r = room();
    let z = r.initial_state();
    let dt = 30.0;
    let ext = preponderant_extension(&r, &z, dt).unwrap();
    let p = ext.probability;
    let n = 100_000;
    let max = 12;
    let mut free = vec![0.0; max];
    let mut avoid = vec![0.0; max];
    for i in 0..n {
        let mut rng = stream(26, Domain::Oracle, 0, i);
        let c = simulate(&r, &z, dt, &mut rng).unwrap().0.jumps.len();
        free[c.min(max - 1)] += 1.0;
        let mut rng = stream(26, Domain::Oracle, 1, i);
        let c = sample_avoiding_extension(&r, &ext, &mut rng).unwrap().0.jumps.len();
        avoid[c.min(max - 1)] += 1.0;
    }
    let a = ext.segment.jumps.len();
    for c in 0..max {
        let pf = free[c] / n as f64;
        let pa = avoid[c] / n as f64;
        let mix = (1.0 - p) * pa + if c == a { p } else { 0.0 };
        let sd = (pf * (1.0 - pf) / n as f64 + (1.0 - p).powi(2) * pa * (1.0 - pa) / n as f64).sqrt();
        assert!((pf - mix).abs() <= 3.0 * sd.max(1.0 / n as f64), "count {c}: free {pf} vs mixture {mix}");
    }
}
