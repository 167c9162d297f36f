use proptest::prelude::*;
use rarepdmp::oracle::cold_standby_exact_p;
use rarepdmp::oracle::stats::chi_square;
use rarepdmp::potentials::{Potential, PotentialSpec, TimeProfile};
use rarepdmp::rng::{stream, Domain};
use rarepdmp::samplers::{
    effective_sample_size, estimate, mean_and_variance, multinomial_resample, replicated_experiment, EstimateReport, Method,
    MethodConfig, Observable, Problem,
};
use rarepdmp::systems::{ColdStandby, ColdStandbyParams, Dam, DamParams, HeatedRoom, HeatedRoomParams, System};
use rarepdmp::{Execution, PathPoint, PdmpModel};

const ALPHA: PotentialSpec = PotentialSpec::UAlpha { alpha: 1.1, profile: TimeProfile::Constant };
const FLAT: PotentialSpec = PotentialSpec::Constant { value: 1.0 };

fn standby(lambda: f64) -> ColdStandby {
    ColdStandby::new(ColdStandbyParams { fail_rate: lambda, tf: 10.0 }).unwrap()
}

fn cfg(method: Method, n_particles: usize, n_steps: usize, seed: u64) -> MethodConfig {
    MethodConfig { seed, ..MethodConfig::new(method, n_particles, n_steps) }
}

fn check_weights(r: &EstimateReport) {
    for s in &r.steps {
        assert!((s.candidate_weight_sum - 1.0).abs() < 1e-12, "step {}: candidate sum {}", s.step, s.candidate_weight_sum);
        assert!((s.weight_sum - 1.0).abs() < 1e-12, "step {}: weight sum {}", s.step, s.weight_sum);
    }
}

#[test]
fn constant_observable_gives_one() {
    let m = standby(0.1);
    let z = m.initial_state();
    let p = Problem::new(&m, &FLAT, &z).with_observable(Observable::Constant { value: 1.0 });
    for method in [Method::Mc, Method::Ips, Method::Smc, Method::Ipsm] {
        let r = estimate(&p, &cfg(method, 100, 3, 1)).unwrap();
        assert!((r.p_hat - 1.0).abs() < 1e-12, "{method}: {}", r.p_hat);
    }
}

#[test]
fn monte_carlo_matches_the_cold_standby_closed_form() {
    for lambda in [0.1, 0.01] {
        let m = standby(lambda);
        let z = m.initial_state();
        let exact = cold_standby_exact_p(lambda, 10.0);
        let r = estimate(&Problem::new(&m, &FLAT, &z), &cfg(Method::Mc, 100_000, 1, 2)).unwrap();
        let sigma = (exact * (1.0 - exact) / 1e5).sqrt();
        assert!((r.p_hat - exact).abs() < 3.0 * sigma, "lambda={lambda}: {} vs {exact}", r.p_hat);
        assert!(r.steps.is_empty());
    }
}

#[test]
fn every_method_is_unbiased_on_cold_standby() {
    let m = standby(0.1);
    let z = m.initial_state();
    let exact = cold_standby_exact_p(0.1, 10.0);
    let problem = Problem::new(&m, &ALPHA, &z);
    for method in [Method::Mc, Method::Ips, Method::Smc, Method::Ipsm] {
        let c = MethodConfig { replications: 100, ess_threshold: 0.5, ..cfg(method, 1000, 4, 3) };
        let rep = replicated_experiment(&problem, &c).unwrap();
        let se = (rep.variance / 100.0).sqrt();
        assert!((rep.mean - exact).abs() < 3.0 * se, "{method}: {} ± {se} vs {exact}", rep.mean);
        rep.reports.iter().for_each(check_weights);
    }
}

#[test]
fn weights_stay_normalized_on_the_benchmarks() {
    let room = HeatedRoom::new(HeatedRoomParams { tf: 50.0, ..Default::default() }).unwrap();
    let z = room.initial_state();
    let problem = Problem::new(&room, &ALPHA, &z);
    for method in [Method::Ips, Method::Smc, Method::Ipsm] {
        check_weights(&estimate(&problem, &MethodConfig { ess_threshold: 0.7, ..cfg(method, 500, 5, 4) }).unwrap());
    }
    let dam = Dam::new(DamParams::default()).unwrap();
    let z = dam.initial_state();
    let pot = PotentialSpec::DamExponential { alpha1: -0.9, alpha2: -1.0, xlim: 10.0 };
    let problem = Problem::new(&dam, &pot, &z);
    for method in [Method::Ips, Method::Smc, Method::Ipsm] {
        check_weights(&estimate(&problem, &cfg(method, 500, 5, 5)).unwrap());
    }
}

fn arb_system() -> impl Strategy<Value = System> {
    prop_oneof![
        (0.01f64..0.5, 1.0f64..20.0).prop_map(|(l, tf)| System::ColdStandby(ColdStandby::new(ColdStandbyParams { fail_rate: l, tf }).unwrap())),
        (5.0f64..60.0, 0.0f64..0.3).prop_map(|(tf, gamma)| System::HeatedRoom(
            HeatedRoom::new(HeatedRoomParams { tf, gamma, fail_a: 0.02, ..Default::default() }).unwrap()
        )),
        (0.001f64..0.1, 10.0f64..50.0, any::<bool>()).prop_map(|(stick, tf, standby)| System::Dam(
            Dam::new(DamParams { stick_rate: stick, tf, standby_can_stick: standby, ..Default::default() }).unwrap()
        )),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn ipsm_cluster_accounting(system in arb_system(), n_part in 2usize..120, n_steps in 1usize..6, alpha in 0.0f64..2.0, seed in any::<u64>()) {
        let z = system.initial_state();
        let pot = PotentialSpec::UAlpha { alpha, profile: TimeProfile::Constant };
        let r = estimate(&Problem::new(&system, &pot, &z), &cfg(Method::Ipsm, n_part, n_steps, seed)).unwrap();
        prop_assert!(!r.stopped);
        prop_assert_eq!(r.steps.len(), n_steps);
        for (k, s) in r.steps.iter().enumerate() {
            prop_assert!(s.resampled);
            prop_assert!(s.clusters >= 1 && s.clusters <= n_part);
            prop_assert!(s.degenerate_clusters <= s.clusters);
            prop_assert_eq!(s.propagated, n_part + s.clusters);
            prop_assert!((s.weight_sum - 1.0).abs() < 1e-12);
            prop_assert!((s.candidate_weight_sum - 1.0).abs() < 1e-12);
            let expected_size = if k == 0 { n_part } else { r.steps[k - 1].propagated };
            prop_assert_eq!(s.sample_size, expected_size);
        }
        // One realization is a product of averages and may exceed 1.
        prop_assert!(r.p_hat.is_finite() && r.p_hat >= 0.0);
    }
}

#[test]
fn smc_without_threshold_never_resamples() {
    let m = standby(0.1);
    let z = m.initial_state();
    let r = estimate(&Problem::new(&m, &ALPHA, &z), &MethodConfig { ess_threshold: 0.0, ..cfg(Method::Smc, 300, 6, 6) }).unwrap();
    assert!(r.resampled_flags().iter().all(|&f| !f));
    check_weights(&r);
}

#[test]
fn smc_with_threshold_one_is_ips() {
    let m = standby(0.1);
    let z = m.initial_state();
    let problem = Problem::new(&m, &ALPHA, &z);
    for seed in 0..5 {
        let smc = estimate(&problem, &MethodConfig { ess_threshold: 1.0, ..cfg(Method::Smc, 300, 6, seed) }).unwrap();
        let ips = estimate(&problem, &cfg(Method::Ips, 300, 6, seed)).unwrap();
        assert!(smc.resampled_flags().iter().all(|&f| f));
        assert_eq!(smc.p_hat.to_bits(), ips.p_hat.to_bits());
    }
}

#[test]
fn balanced_potentials_keep_the_full_sample_size() {
    let m = standby(0.1);
    let z = m.initial_state();
    let r = estimate(&Problem::new(&m, &FLAT, &z), &MethodConfig { ess_threshold: 0.9, ..cfg(Method::Smc, 250, 4, 7) }).unwrap();
    for s in &r.steps {
        assert!((s.ess - 250.0).abs() < 1e-9);
        assert!(!s.resampled);
    }
}

#[test]
fn single_stage_ips_with_flat_potential_is_monte_carlo() {
    let m = standby(0.1);
    let z = m.initial_state();
    let problem = Problem::new(&m, &FLAT, &z);
    for seed in 0..5 {
        let mc = estimate(&problem, &cfg(Method::Mc, 1000, 1, seed)).unwrap();
        let ips = estimate(&problem, &cfg(Method::Ips, 1000, 1, seed)).unwrap();
        assert!((mc.p_hat - ips.p_hat).abs() < 1e-15, "{} vs {}", mc.p_hat, ips.p_hat);
    }
}

/// Zero from step `at` on.
struct Vanishing {
    at: usize,
}

impl Potential for Vanishing {
    fn log_potential(&self, k: usize, _point: &PathPoint, carried: f64) -> (f64, f64) {
        (if k >= self.at { f64::NEG_INFINITY } else { 0.0 }, carried)
    }
}

#[test]
fn vanishing_potentials_stop_the_run() {
    let m = standby(0.1);
    let z = m.initial_state();
    let pot = Vanishing { at: 2 };
    let problem = Problem::new(&m, &pot, &z);
    for method in [Method::Ips, Method::Smc, Method::Ipsm] {
        let r = estimate(&problem, &cfg(method, 50, 5, 8)).unwrap();
        assert!(r.stopped, "{method}");
        assert_eq!(r.p_hat, 0.0);
        assert_eq!(r.steps.len(), 3);
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    let room = HeatedRoom::new(HeatedRoomParams { tf: 40.0, ..Default::default() }).unwrap();
    let z = room.initial_state();
    for method in [Method::Mc, Method::Ips, Method::Smc, Method::Ipsm] {
        let c = MethodConfig { ess_threshold: 0.5, ..cfg(method, 400, 4, 9) };
        let seq = estimate(&Problem::new(&room, &ALPHA, &z).with_execution(Execution::Sequential), &c).unwrap();
        let par = estimate(&Problem::new(&room, &ALPHA, &z).with_execution(Execution::Parallel), &c).unwrap();
        assert_eq!(seq.p_hat.to_bits(), par.p_hat.to_bits(), "{method}");
        assert_eq!(seq.steps, par.steps);
    }
}

#[test]
fn effective_sample_size_examples() {
    assert!((effective_sample_size(&[0.1; 10], &[3.0; 10]).unwrap() - 10.0).abs() < 1e-12);
    let mut g = vec![0.0; 10];
    g[4] = 1.0;
    assert!((effective_sample_size(&[0.1; 10], &g).unwrap() - 1.0).abs() < 1e-12);
    let e = effective_sample_size(&[1.0; 3], &[0.5, 0.25, 0.25]).unwrap();
    assert!((e - 2.6667).abs() < 1e-4);
    assert_eq!(effective_sample_size(&[0.1; 3], &[0.0; 3]), None);
}

#[test]
fn multinomial_counts_have_the_right_moments() {
    let cells = 8;
    let n = 10_000;
    let reps = 1000;
    let mut sums = vec![0.0; cells];
    for r in 0..reps {
        let c = multinomial_resample(&vec![1.0 / cells as f64; cells], n, &mut stream(30, Domain::Selection, r, 0));
        assert_eq!(c.iter().sum::<usize>(), n);
        for (s, v) in sums.iter_mut().zip(&c) {
            *s += *v as f64;
        }
    }
    let p = 1.0 / cells as f64;
    let se = (n as f64 * p * (1.0 - p) / reps as f64).sqrt();
    for s in sums {
        assert!((s / reps as f64 - n as f64 * p).abs() < 3.0 * se);
    }
}

#[test]
fn multinomial_passes_chi_square() {
    let w = [0.7, 0.2, 0.1];
    let n = 10_000;
    let c = multinomial_resample(&w, n, &mut stream(31, Domain::Selection, 0, 0));
    let observed: Vec<f64> = c.iter().map(|&v| v as f64).collect();
    let expected: Vec<f64> = w.iter().map(|p| p * n as f64).collect();
    let (_, pvalue) = chi_square(&observed, &expected);
    assert!(pvalue > 0.01, "p-value {pvalue}");
}

#[test]
fn replications_of_a_constant_have_no_variance() {
    let m = standby(0.1);
    let z = m.initial_state();
    let problem = Problem::new(&m, &FLAT, &z).with_observable(Observable::Constant { value: 1.0 });
    let rep = replicated_experiment(&problem, &MethodConfig { replications: 5, ..cfg(Method::Mc, 50, 1, 10) }).unwrap();
    assert_eq!(rep.variance, 0.0);
    assert_eq!(rep.mean, 1.0);
    assert!(replicated_experiment(&problem, &cfg(Method::Mc, 50, 1, 10)).is_err());
    let seeds: Vec<u64> = rep.reports.iter().map(|r| r.seed).collect();
    assert!(seeds.windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn invalid_configurations_are_rejected() {
    let m = standby(0.1);
    let z = m.initial_state();
    let problem = Problem::new(&m, &FLAT, &z);
    assert!(estimate(&problem, &cfg(Method::Mc, 1, 1, 0)).is_err());
    assert!(estimate(&problem, &cfg(Method::Ips, 10, 0, 0)).is_err());
    assert!(estimate(&problem, &MethodConfig { ess_threshold: 1.5, ..cfg(Method::Smc, 10, 2, 0) }).is_err());
}

#[test]
fn sample_statistics() {
    let (m, v) = mean_and_variance(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m, 2.5);
    assert!((v - 5.0 / 3.0).abs() < 1e-15);
}

