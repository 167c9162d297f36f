//! Two units in cold standby with no repair.
//!
//! Unit 1 works until it fails at rate λ; unit 2 then starts and fails at
//! the same rate. The system fails when both are down, so the failure time
//! is Gamma(2, λ) and the failure probability has a closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PdmpModel, RateList};
use crate::state::{State, Status, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct ColdStandbyParams {
    pub fail_rate: f64,
    pub tf: f64,
}

impl Default for ColdStandbyParams {
    fn default() -> Self {
        ColdStandbyParams { fail_rate: 0.1, tf: 10.0 }
    }
}

impl ColdStandbyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fail_rate > 0.0 && self.fail_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("cold standby: failRate must be positive, got {}", self.fail_rate)));
        }
        if !(self.tf > 0.0 && self.tf.is_finite()) {
            return Err(Error::InvalidParameter(format!("cold standby: tf must be positive, got {}", self.tf)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ColdStandby {
    p: ColdStandbyParams,
}

impl ColdStandby {
    pub fn new(params: ColdStandbyParams) -> Result<Self> {
        params.validate()?;
        Ok(ColdStandby { p: params })
    }

    pub fn params(&self) -> &ColdStandbyParams {
        &self.p
    }
}

impl PdmpModel for ColdStandby {
    fn name(&self) -> &str {
        "coldStandby"
    }

    fn components(&self) -> usize {
        2
    }

    fn initial_state(&self) -> State {
        State::new(&[], &[Status::On, Status::Off])
    }

    fn horizon(&self) -> f64 {
        self.p.tf
    }

    fn flow(&self, z: &State, _dt: f64) -> State {
        z.clone()
    }

    fn boundary_hit_time(&self, _z: &State) -> f64 {
        f64::INFINITY
    }

    fn transition_rates(&self, z: &State) -> RateList {
        let m = &z.mode;
        let mut rates = RateList::new();
        match (m.get(0), m.get(1)) {
            (Status::On, Status::Off) => rates.push((m.with(0, Status::Failed).with(1, Status::On), self.p.fail_rate)),
            (Status::Failed, Status::On) => rates.push((m.with(1, Status::Failed), self.p.fail_rate)),
            _ => {}
        }
        rates
    }

    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        self.total_rate(z) * t
    }

    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        Err(Error::UndefinedKernel(format!("cold standby has no boundary ({z})")))
    }

    fn is_critical(&self, z: &State) -> bool {
        z.mode.all_failed()
    }

    fn critical_entry_time(&self, z: &State, _dt: f64) -> Option<f64> {
        self.is_critical(z).then_some(0.0)
    }
}
