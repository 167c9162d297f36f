//! Rare-event estimation for piecewise deterministic Markov processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`state`] and [`model`] define states, jump records, trajectory
//!   skeletons and the [`PdmpModel`] behaviour a concrete system implements.
//! - [`dynamics`] simulates exact trajectories and computes preponderant
//!   (no spontaneous jump, no failure on demand) extensions together with
//!   their survival bookkeeping.
//! - [`systems`] ships the heated-room, dam and cold-standby models.
//! - [`potentials`] scores partial trajectories for selection.
//! - [`memorization`] draws extensions conditioned to differ from the
//!   preponderant one, without rejection.
//! - [`samplers`] implements Monte Carlo, IPS, adaptive SMC and IPS+M.
//! - [`oracle`] holds independent ground truth used by the test suites.
//!
//! Parallel execution is behind the `parallel` feature (on by default).
//! Every particle draws from its own counter-derived stream, so a fixed
//! seed gives the same estimate for any thread count.

pub mod dynamics;
pub mod error;
pub mod memorization;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod potentials;
pub mod rng;
pub mod samplers;
pub mod state;
pub mod systems;

pub use error::{Error, Result};
pub use model::PdmpModel;
pub use par::Execution;
pub use state::{JumpRecord, Mode, PathPoint, State, Status, SurvivalRecord, TrajectorySkeleton, TransitionTable};
