//! Dam with two evacuation valves in passive redundancy.
//!
//! Statuses map as Open = `On`, Closed = `Off`, stuck closed = `Failed`.
//! While one valve is open the outflow balances the inflow; with both stuck
//! the level rises at `Q / S`. The dam fails when the level reaches `xlim`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PdmpModel, RateList};
use crate::state::{State, Status, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct DamParams {
    pub inflow: f64,
    pub surface: f64,
    pub xlim: f64,
    pub stick_rate: f64,
    pub repair_rate: f64,
    pub tf: f64,
    pub x0: f64,
    /// Whether the closed standby valve can also stick while idle.
    pub standby_can_stick: bool,
    /// One repair crew: with both valves stuck, only one is under repair.
    pub single_repairer: bool,
}

impl Default for DamParams {
    fn default() -> Self {
        DamParams {
            inflow: 10.0,
            surface: 10.0,
            xlim: 10.0,
            stick_rate: 0.001,
            repair_rate: 0.1,
            tf: 50.0,
            x0: 0.0,
            standby_can_stick: false,
            single_repairer: false,
        }
    }
}

impl DamParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("dam: {msg}")));
        if [self.inflow, self.surface, self.xlim, self.stick_rate, self.repair_rate, self.tf, self.x0].iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if !(self.inflow > 0.0 && self.surface > 0.0 && self.xlim > 0.0) {
            return bad("inflow, surface and xlim must be positive".into());
        }
        if self.stick_rate < 0.0 || self.repair_rate < 0.0 {
            return bad("rates must be nonnegative".into());
        }
        if !(self.tf > 0.0) {
            return bad(format!("tf must be positive, got {}", self.tf));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Dam {
    p: DamParams,
}

impl Dam {
    pub fn new(params: DamParams) -> Result<Self> {
        params.validate()?;
        Ok(Dam { p: params })
    }

    pub fn params(&self) -> &DamParams {
        &self.p
    }

    fn slope(&self, z: &State) -> f64 {
        if z.mode.all_failed() {
            self.p.inflow / self.p.surface
        } else {
            0.0
        }
    }
}

impl PdmpModel for Dam {
    fn name(&self) -> &str {
        "dam"
    }

    fn components(&self) -> usize {
        2
    }

    fn initial_state(&self) -> State {
        State::new(&[self.p.x0], &[Status::On, Status::Off])
    }

    fn horizon(&self) -> f64 {
        self.p.tf
    }

    fn flow(&self, z: &State, dt: f64) -> State {
        let slope = self.slope(z);
        if slope == 0.0 {
            return z.clone();
        }
        State { x: [z.x[0] + slope * dt].into_iter().collect(), mode: z.mode.clone() }
    }

    fn boundary_hit_time(&self, _z: &State) -> f64 {
        f64::INFINITY
    }

    fn transition_rates(&self, z: &State) -> RateList {
        let m = &z.mode;
        let mut rates = RateList::new();
        for i in 0..2 {
            let other = 1 - i;
            match m.get(i) {
                Status::On => {
                    let mut target = m.with(i, Status::Failed);
                    if target.get(other) == Status::Off {
                        target = target.with(other, Status::On);
                    }
                    rates.push((target, self.p.stick_rate));
                }
                Status::Off => {
                    if self.p.standby_can_stick {
                        rates.push((m.with(i, Status::Failed), self.p.stick_rate));
                    }
                }
                Status::Failed => {
                    let both = m.get(other).is_failed();
                    let target = if both { Status::On } else { Status::Off };
                    let rate = if both && self.p.single_repairer { self.p.repair_rate / 2.0 } else { self.p.repair_rate };
                    rates.push((m.with(i, target), rate));
                }
            }
        }
        rates
    }

    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        self.total_rate(z) * t
    }

    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        Err(Error::UndefinedKernel(format!("the dam has no boundary ({z})")))
    }

    fn is_critical(&self, z: &State) -> bool {
        z.x[0] >= self.p.xlim
    }

    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        if self.is_critical(z) {
            return Some(0.0);
        }
        let slope = self.slope(z);
        if slope <= 0.0 {
            return None;
        }
        let t = (self.p.xlim - z.x[0]) / slope;
        (t <= dt).then_some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Status::*;

    fn dam() -> Dam {
        Dam::new(DamParams::default()).unwrap()
    }

    #[test]
    fn level_rises_only_with_both_valves_stuck() {
        let d = dam();
        assert_eq!(d.flow(&State::new(&[3.0], &[Failed, Failed]), 2.0).x[0], 5.0);
        assert_eq!(d.flow(&State::new(&[3.0], &[On, Failed]), 2.0).x[0], 3.0);
    }

    #[test]
    fn both_stuck_leaves_at_twice_the_repair_rate() {
        let d = dam();
        assert!((d.total_rate(&State::new(&[1.0], &[Failed, Failed])) - 0.2).abs() < 1e-15);
        let rates = d.transition_rates(&State::new(&[1.0], &[Failed, Failed]));
        assert!(rates.iter().all(|(m, _)| m.count(On) == 1));
    }

    #[test]
    fn sticking_hands_over_to_standby() {
        let d = dam();
        let rates = d.transition_rates(&State::new(&[0.0], &[On, Off]));
        assert_eq!(rates.len(), 1);
        assert_eq!(rates[0].0.statuses(), &[Failed, On]);
        let alt = Dam::new(DamParams { standby_can_stick: true, ..Default::default() }).unwrap();
        assert_eq!(alt.transition_rates(&State::new(&[0.0], &[On, Off])).len(), 2);
    }

    #[test]
    fn repair_goes_to_standby_when_other_valve_works() {
        let d = dam();
        let rates = d.transition_rates(&State::new(&[0.0], &[Failed, On]));
        let repair = rates.iter().find(|(m, _)| m.get(0) != Failed).unwrap();
        assert_eq!(repair.0.statuses(), &[Off, On]);
    }

    #[test]
    fn first_passage_is_exact() {
        let d = dam();
        let z = State::new(&[4.0], &[Failed, Failed]);
        assert_eq!(d.critical_entry_time(&z, 10.0), Some(6.0));
        assert_eq!(d.critical_entry_time(&z, 5.0), None);
    }
}
