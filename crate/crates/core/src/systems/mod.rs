//! The shipped systems and a closed enum over them.

pub mod clock;
pub mod cold_standby;
pub mod dam;
pub mod heated_room;

pub use clock::{Clock, ClockParams};
pub use cold_standby::{ColdStandby, ColdStandbyParams};
pub use dam::{Dam, DamParams};
pub use heated_room::{FlowSolver, HeatedRoom, HeatedRoomParams};

use crate::error::Result;
use crate::model::{PdmpModel, RateList};
use crate::state::{Mode, State, TransitionTable};

/// Any of the shipped systems, dispatching statically per variant.
#[derive(Clone, Debug)]
pub enum System {
    HeatedRoom(HeatedRoom),
    Dam(Dam),
    ColdStandby(ColdStandby),
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            System::HeatedRoom($m) => $e,
            System::Dam($m) => $e,
            System::ColdStandby($m) => $e,
        }
    };
}

impl PdmpModel for System {
    fn name(&self) -> &str {
        dispatch!(self, m => m.name())
    }
    fn components(&self) -> usize {
        dispatch!(self, m => m.components())
    }
    fn initial_state(&self) -> State {
        dispatch!(self, m => m.initial_state())
    }
    fn horizon(&self) -> f64 {
        dispatch!(self, m => m.horizon())
    }
    fn flow(&self, z: &State, dt: f64) -> State {
        dispatch!(self, m => m.flow(z, dt))
    }
    fn boundary_hit_time(&self, z: &State) -> f64 {
        dispatch!(self, m => m.boundary_hit_time(z))
    }
    fn transition_rates(&self, z: &State) -> RateList {
        dispatch!(self, m => m.transition_rates(z))
    }
    fn total_rate(&self, z: &State) -> f64 {
        dispatch!(self, m => m.total_rate(z))
    }
    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        dispatch!(self, m => m.cumulative_rate(z, t))
    }
    fn arrival(&self, departure: &State, target: &Mode) -> State {
        dispatch!(self, m => m.arrival(departure, target))
    }
    fn boundary_state(&self, z: &State, t_star: f64) -> State {
        dispatch!(self, m => m.boundary_state(z, t_star))
    }
    fn interior_kernel(&self, z: &State) -> Result<TransitionTable> {
        dispatch!(self, m => m.interior_kernel(z))
    }
    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        dispatch!(self, m => m.boundary_kernel(z))
    }
    fn is_critical(&self, z: &State) -> bool {
        dispatch!(self, m => m.is_critical(z))
    }
    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        dispatch!(self, m => m.critical_entry_time(z, dt))
    }
}
