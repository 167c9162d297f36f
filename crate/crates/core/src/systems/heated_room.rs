//! Room heated by two heaters in passive redundancy.
//!
//! The temperature relaxes toward the exterior temperature, or toward
//! `xe + beta2 / beta1` while a heater is on. Heaters switch off at `xmax`;
//! at `xmin` the off heaters are asked in order until one starts, each
//! failing on demand with probability `gamma`. The room fails below 0 °C.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{numeric_boundary_time, scan_critical_entry, PdmpModel, RateList};
use crate::numeric;
use crate::state::{Mode, State, Status, TransitionTable};

/// How the temperature flow is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum FlowSolver {
    ClosedForm,
    /// Fixed-step RK4, boundary times by bisection, Λ by adaptive Simpson.
    Rk4 { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct HeatedRoomParams {
    pub xe: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub xmin: f64,
    pub xmax: f64,
    pub gamma: f64,
    pub fail_a: f64,
    pub fail_b: f64,
    pub repair_rate: f64,
    pub x0: f64,
    pub m0: [Status; 2],
    pub tf: f64,
    pub flow_solver: FlowSolver,
}

/// Horizon calibrated so that the failure probability sits in [1e-5, 1e-4].
pub const CALIBRATED_TF: f64 = 300.0;

impl Default for HeatedRoomParams {
    fn default() -> Self {
        HeatedRoomParams {
            xe: -5.0,
            beta1: 0.1,
            beta2: 5.0,
            xmin: 15.0,
            xmax: 25.0,
            gamma: 0.01,
            fail_a: 0.0021,
            fail_b: 0.00015,
            repair_rate: 0.2,
            x0: 20.0,
            m0: [Status::On, Status::Off],
            tf: CALIBRATED_TF,
            flow_solver: FlowSolver::ClosedForm,
        }
    }
}

impl HeatedRoomParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("heated room: {msg}")));
        let all = [self.xe, self.beta1, self.beta2, self.xmin, self.xmax, self.gamma, self.fail_a, self.fail_b, self.repair_rate, self.x0, self.tf];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if !(self.xe < 0.0 && 0.0 < self.xmin && self.xmin < self.xmax) {
            return bad(format!("need xe < 0 < xmin < xmax, got xe={}, xmin={}, xmax={}", self.xe, self.xmin, self.xmax));
        }
        if !(self.beta1 > 0.0) || self.beta2 < 0.0 {
            return bad(format!("need beta1 > 0 and beta2 >= 0, got {} and {}", self.beta1, self.beta2));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if self.fail_a + self.fail_b * self.xe < 0.0 || self.fail_a + self.fail_b * self.xmax < 0.0 {
            return bad("failure rate must be nonnegative on [xe, xmax]".into());
        }
        if self.repair_rate < 0.0 {
            return bad(format!("repairRate must be nonnegative, got {}", self.repair_rate));
        }
        if !(self.tf > 0.0) {
            return bad(format!("tf must be positive, got {}", self.tf));
        }
        if self.x0 > self.xmax || self.x0 < self.xe {
            return bad(format!("x0={} outside [xe, xmax]", self.x0));
        }
        if let FlowSolver::Rk4 { step } = self.flow_solver {
            if !(step > 0.0) {
                return bad(format!("integrator step must be positive, got {step}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HeatedRoom {
    p: HeatedRoomParams,
}

impl HeatedRoom {
    pub fn new(params: HeatedRoomParams) -> Result<Self> {
        params.validate()?;
        Ok(HeatedRoom { p: params })
    }

    pub fn params(&self) -> &HeatedRoomParams {
        &self.p
    }

    fn heating(m: &Mode) -> bool {
        m.any_on()
    }

    /// Relaxation target of the temperature in mode `m`.
    pub fn equilibrium(&self, m: &Mode) -> f64 {
        if Self::heating(m) {
            self.p.xe + self.p.beta2 / self.p.beta1
        } else {
            self.p.xe
        }
    }

    /// Whether the low threshold bounds the region of `m`.
    fn bounded_below(m: &Mode) -> bool {
        !m.any_on() && !m.all_failed()
    }

    fn inside(&self, z: &State) -> bool {
        let x = z.x[0];
        x < self.p.xmax && (!Self::bounded_below(&z.mode) || x > self.p.xmin)
    }

    fn rate_of_failure(&self, x: f64) -> f64 {
        self.p.fail_a + self.p.fail_b * x
    }

    /// Time for the relaxation toward `eq` to go from `x` to `target`.
    fn crossing_time(&self, x: f64, eq: f64, target: f64) -> f64 {
        ((x - eq) / (target - eq)).ln() / self.p.beta1
    }

    fn closed_boundary_time(&self, z: &State) -> f64 {
        let x = z.x[0];
        let m = &z.mode;
        if Self::heating(m) {
            let eq = self.equilibrium(m);
            if x >= self.p.xmax {
                0.0
            } else if eq > self.p.xmax {
                self.crossing_time(x, eq, self.p.xmax)
            } else {
                f64::INFINITY
            }
        } else if m.all_failed() {
            f64::INFINITY
        } else if x <= self.p.xmin {
            0.0
        } else {
            self.crossing_time(x, self.p.xe, self.p.xmin)
        }
    }

    fn numeric_flow(&self, z: &State, dt: f64, step: f64) -> State {
        let (b1, xe) = (self.p.beta1, self.p.xe);
        let heat = if Self::heating(&z.mode) { self.p.beta2 } else { 0.0 };
        let x = numeric::rk4(|x, dx| dx[0] = b1 * (xe - x[0]) + heat, &z.x, dt, step);
        State { x: x.into_iter().collect(), mode: z.mode.clone() }
    }
}

impl PdmpModel for HeatedRoom {
    fn name(&self) -> &str {
        "heatedRoom"
    }

    fn components(&self) -> usize {
        2
    }

    fn initial_state(&self) -> State {
        State::new(&[self.p.x0], &self.p.m0)
    }

    fn horizon(&self) -> f64 {
        self.p.tf
    }

    fn flow(&self, z: &State, dt: f64) -> State {
        match self.p.flow_solver {
            FlowSolver::ClosedForm => {
                if dt == 0.0 {
                    return z.clone();
                }
                let eq = self.equilibrium(&z.mode);
                let x = eq + (z.x[0] - eq) * (-self.p.beta1 * dt).exp();
                State { x: [x].into_iter().collect(), mode: z.mode.clone() }
            }
            FlowSolver::Rk4 { step } => self.numeric_flow(z, dt, step),
        }
    }

    fn boundary_hit_time(&self, z: &State) -> f64 {
        match self.p.flow_solver {
            FlowSolver::ClosedForm => self.closed_boundary_time(z),
            FlowSolver::Rk4 { step } => {
                // Reachability is decided analytically; only the time is numeric.
                let closed = self.closed_boundary_time(z);
                if closed == 0.0 || closed.is_infinite() {
                    return closed;
                }
                numeric_boundary_time(z, |s, h| self.numeric_flow(s, h, step), |s| self.inside(s), 1e6, 0.05)
            }
        }
    }

    fn boundary_state(&self, z: &State, _t_star: f64) -> State {
        let x = if Self::heating(&z.mode) { self.p.xmax } else { self.p.xmin };
        State { x: [x].into_iter().collect(), mode: z.mode.clone() }
    }

    fn transition_rates(&self, z: &State) -> RateList {
        let x = z.x[0];
        let m = &z.mode;
        let mut rates = RateList::new();
        for i in 0..2 {
            match m.get(i) {
                Status::On => rates.push((m.with(i, Status::Failed), self.rate_of_failure(x))),
                Status::Off => {}
                Status::Failed => {
                    let other_failed = m.get(1 - i).is_failed();
                    let target = if x <= self.p.xmin && other_failed { Status::On } else { Status::Off };
                    rates.push((m.with(i, target), self.p.repair_rate));
                }
            }
        }
        rates
    }

    fn total_rate(&self, z: &State) -> f64 {
        let m = &z.mode;
        m.count(Status::On) as f64 * self.rate_of_failure(z.x[0]) + m.count(Status::Failed) as f64 * self.p.repair_rate
    }

    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        match self.p.flow_solver {
            FlowSolver::ClosedForm => {
                let m = &z.mode;
                let n_on = m.count(Status::On) as f64;
                let n_failed = m.count(Status::Failed) as f64;
                let eq = self.equilibrium(m);
                let b1 = self.p.beta1;
                let x_integral = eq * t + (z.x[0] - eq) * (-(-b1 * t).exp_m1()) / b1;
                n_on * (self.p.fail_a * t + self.p.fail_b * x_integral) + n_failed * self.p.repair_rate * t
            }
            FlowSolver::Rk4 { .. } => numeric::adaptive_simpson(|u| self.total_rate(&self.flow(z, u)), 0.0, t, crate::model::QUADRATURE_REL_TOL),
        }
    }

    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        let m = &z.mode;
        if Self::heating(m) {
            let mut off = m.clone();
            for i in 0..2 {
                if off.get(i) == Status::On {
                    off = off.with(i, Status::Off);
                }
            }
            return Ok(TransitionTable { entries: vec![(z.with_mode(off), 1.0)], nominal: Some(0) });
        }
        if m.all_failed() {
            return Err(Error::UndefinedKernel(format!("no boundary in mode {m}")));
        }
        // Ask the off heaters in order; each fails on demand with probability gamma.
        let g = self.p.gamma;
        let mut entries = Vec::new();
        let mut reach = 1.0;
        let mut cur = m.clone();
        for i in 0..2 {
            if cur.get(i) != Status::Off {
                continue;
            }
            let p_on = reach * (1.0 - g);
            if p_on > 0.0 {
                entries.push((z.with_mode(cur.with(i, Status::On)), p_on));
            }
            reach *= g;
            cur = cur.with(i, Status::Failed);
        }
        if reach > 0.0 {
            entries.push((z.with_mode(cur), reach));
        }
        Ok(TransitionTable { entries, nominal: Some(0) })
    }

    fn is_critical(&self, z: &State) -> bool {
        z.x[0] < 0.0
    }

    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        let x = z.x[0];
        if x < 0.0 {
            return Some(0.0);
        }
        if let FlowSolver::Rk4 { .. } = self.p.flow_solver {
            return scan_critical_entry(self, z, dt);
        }
        let eq = self.equilibrium(&z.mode);
        if eq >= 0.0 {
            return None;
        }
        let t = self.crossing_time(x, eq, 0.0);
        (t <= dt.min(self.closed_boundary_time(z))).then_some(t)
    }
}
