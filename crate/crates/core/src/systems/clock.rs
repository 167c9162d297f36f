//! One component with a constant hazard and a periodic forced reset.
//!
//! While `On`, the clock `x` runs at unit speed and the component fails at
//! rate `rate`. When `x` reaches `period` a control asks for a reset: with
//! probability 1 − γ the clock goes back to 0 (running again, or parked in
//! `Off` when `restart` is false), otherwise the component fails on demand.
//! `Failed` is critical and absorbing. Small enough for exact laws in tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PdmpModel, RateList};
use crate::state::{State, Status, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ClockParams {
    pub rate: f64,
    /// Reset threshold; infinite for a clock that never resets.
    pub period: f64,
    pub gamma: f64,
    pub restart: bool,
    pub tf: f64,
}

impl Default for ClockParams {
    fn default() -> Self {
        ClockParams { rate: 0.2, period: 5.0, gamma: 0.0, restart: true, tf: 10.0 }
    }
}

impl ClockParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("clock: {msg}")));
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be finite and nonnegative, got {}", self.rate));
        }
        if !(self.period > 0.0) {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.tf > 0.0 && self.tf.is_finite()) {
            return bad(format!("tf must be positive, got {}", self.tf));
        }
        if self.rate == 0.0 && self.period.is_infinite() {
            return bad("a clock with no hazard and no reset never jumps".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Clock {
    p: ClockParams,
}

impl Clock {
    pub fn new(params: ClockParams) -> Result<Self> {
        params.validate()?;
        Ok(Clock { p: params })
    }

    pub fn params(&self) -> &ClockParams {
        &self.p
    }

    fn running(z: &State) -> bool {
        z.mode.get(0) == Status::On
    }
}

impl PdmpModel for Clock {
    fn name(&self) -> &str {
        "clock"
    }

    fn components(&self) -> usize {
        1
    }

    fn initial_state(&self) -> State {
        State::new(&[0.0], &[Status::On])
    }

    fn horizon(&self) -> f64 {
        self.p.tf
    }

    fn flow(&self, z: &State, dt: f64) -> State {
        if !Self::running(z) {
            return z.clone();
        }
        State { x: [z.x[0] + dt].into_iter().collect(), mode: z.mode.clone() }
    }

    fn boundary_hit_time(&self, z: &State) -> f64 {
        if Self::running(z) {
            (self.p.period - z.x[0]).max(0.0)
        } else {
            f64::INFINITY
        }
    }

    fn transition_rates(&self, z: &State) -> RateList {
        let mut rates = RateList::new();
        if Self::running(z) && self.p.rate > 0.0 {
            rates.push((z.mode.with(0, Status::Failed), self.p.rate));
        }
        rates
    }

    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        self.total_rate(z) * t
    }

    fn boundary_state(&self, z: &State, _t_star: f64) -> State {
        State { x: [self.p.period].into_iter().collect(), mode: z.mode.clone() }
    }

    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        if !Self::running(z) || z.x[0] < self.p.period - 1e-9 {
            return Err(Error::UndefinedKernel(format!("clock state {z} is not on the reset threshold")));
        }
        let reset = State::new(&[0.0], &[if self.p.restart { Status::On } else { Status::Off }]);
        let mut entries = vec![(reset, 1.0 - self.p.gamma)];
        if self.p.gamma > 0.0 {
            entries.push((z.with_mode(z.mode.with(0, Status::Failed)), self.p.gamma));
        }
        Ok(TransitionTable { entries, nominal: Some(0) })
    }

    fn is_critical(&self, z: &State) -> bool {
        z.mode.get(0) == Status::Failed
    }

    fn critical_entry_time(&self, z: &State, _dt: f64) -> Option<f64> {
        self.is_critical(z).then_some(0.0)
    }
}
