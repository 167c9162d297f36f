//! The preconfigured desk-scale table reproductions.

use anyhow::{bail, Result};
use rarepdmp::potentials::{PotentialSpec, TimeProfile};
use rarepdmp::samplers::{Method, MethodConfig};
use rarepdmp::systems::{DamParams, HeatedRoomParams};

use crate::config::{OutputConfig, Resolved, SystemKind, SystemParams};

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub particles: usize,
    pub replications: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { particles: 10_000, replications: None }
    }
}

fn row(method: Method, n_particles: usize, n_steps: usize, replications: usize, seed: u64) -> MethodConfig {
    MethodConfig { method, n_particles, n_steps, ess_threshold: 1.0, seed, replications }
}

/// Heated room at the calibrated defaults with U_α, α = 1.1: MC once, then
/// IPS and IPS+M at n = 5 and n = 10.
pub fn table1(seed: u64, budget: Budget) -> Result<Resolved> {
    let r = budget.replications.unwrap_or(30);
    let n = budget.particles;
    let methods = vec![
        row(Method::Mc, n, 1, r, seed),
        row(Method::Ips, n, 5, r, seed.wrapping_add(1)),
        row(Method::Ipsm, n, 5, r, seed.wrapping_add(2)),
        row(Method::Ips, n, 10, r, seed.wrapping_add(3)),
        row(Method::Ipsm, n, 10, r, seed.wrapping_add(4)),
    ];
    let params = SystemParams::HeatedRoom(HeatedRoomParams::default());
    let potential = PotentialSpec::UAlpha { alpha: 1.1, profile: TimeProfile::Constant };
    resolved(SystemKind::HeatedRoom, params, potential, methods, seed)
}

/// Dam at its default parameters with the exponential potential
/// (α₁, α₂) = (−0.9, −1) and n = 5.
pub fn table2(seed: u64, budget: Budget) -> Result<Resolved> {
    let r = budget.replications.unwrap_or(20);
    let n = budget.particles;
    let methods = vec![
        row(Method::Mc, n, 1, r, seed),
        row(Method::Ips, n, 5, r, seed.wrapping_add(1)),
        row(Method::Ipsm, n, 5, r, seed.wrapping_add(2)),
    ];
    let params = SystemParams::Dam(DamParams::default());
    let potential = PotentialSpec::DamExponential { alpha1: -0.9, alpha2: -1.0, xlim: 10.0 };
    resolved(SystemKind::Dam, params, potential, methods, seed)
}

pub fn table(which: u8, seed: u64, budget: Budget) -> Result<Resolved> {
    match which {
        1 => table1(seed, budget),
        2 => table2(seed, budget),
        other => bail!("there is no table {other}; choose 1 or 2"),
    }
}

fn resolved(kind: SystemKind, params: SystemParams, potential: PotentialSpec, methods: Vec<MethodConfig>, seed: u64) -> Result<Resolved> {
    for m in &methods {
        m.validate()?;
        anyhow::ensure!(m.replications >= 2, "R must be at least 2");
    }
    let system = params.build()?;
    Ok(Resolved { kind, params, system, potential, methods, seed, workers: None, output: OutputConfig::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rarepdmp::systems::heated_room::CALIBRATED_TF;

    #[test]
    fn presets_resolve() {
        let t1 = table(1, 5, Budget::default()).unwrap();
        assert_eq!(t1.methods.len(), 5);
        assert!(t1.methods.iter().all(|m| m.replications == 30 && m.n_particles == 10_000));
        match &t1.params {
            SystemParams::HeatedRoom(p) => assert_eq!(p.tf, CALIBRATED_TF),
            other => panic!("{other:?}"),
        }
        let t2 = table(2, 5, Budget { particles: 100, replications: Some(3) }).unwrap();
        assert_eq!(t2.methods[2].method, Method::Ipsm);
        assert_eq!(t2.methods[2].n_steps, 5);
        assert!(table(3, 5, Budget::default()).is_err());
    }
}
