//! States, jump records and the bookkeeping attached to trajectories.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Absolute tolerance on physical variables when comparing states.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// Tolerance on the total mass of a [`TransitionTable`].
pub const KERNEL_MASS_TOLERANCE: f64 = 1e-12;

/// Discrete status of one component.
///
/// Systems map their own vocabulary onto these three labels: a dam valve
/// that is open is `On`, closed is `Off` and stuck closed is `Failed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    On,
    Off,
    Failed,
}

impl Status {
    pub fn is_failed(self) -> bool {
        self == Status::Failed
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::On => "On",
            Status::Off => "Off",
            Status::Failed => "F",
        })
    }
}

/// Tuple of per-component statuses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode(pub SmallVec<[Status; 4]>);

impl Mode {
    pub fn new(statuses: &[Status]) -> Self {
        Mode(SmallVec::from_slice(statuses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Status {
        self.0[i]
    }

    pub fn statuses(&self) -> &[Status] {
        &self.0
    }

    /// Copy of `self` with component `i` set to `status`.
    pub fn with(&self, i: usize, status: Status) -> Mode {
        let mut m = self.clone();
        m.0[i] = status;
        m
    }

    pub fn count(&self, status: Status) -> usize {
        self.0.iter().filter(|&&s| s == status).count()
    }

    /// Number of components that are not failed.
    pub fn working(&self) -> usize {
        self.0.iter().filter(|s| !s.is_failed()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.0.iter().all(|s| s.is_failed())
    }

    pub fn any_on(&self) -> bool {
        self.0.contains(&Status::On)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str(")")
    }
}

/// Instantaneous state: physical variables paired with a mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: SmallVec<[f64; 2]>,
    pub mode: Mode,
}

impl State {
    pub fn new(x: &[f64], mode: &[Status]) -> Self {
        State { x: SmallVec::from_slice(x), mode: Mode::new(mode) }
    }

    pub fn with_mode(&self, mode: Mode) -> State {
        State { x: self.x.clone(), mode }
    }

    /// Structural equality: exact on the mode, [`STATE_TOLERANCE`] on `x`.
    pub fn same_as(&self, other: &State) -> bool {
        self.mode == other.mode
            && self.x.len() == other.x.len()
            && self.x.iter().zip(&other.x).all(|(a, b)| (a - b).abs() <= STATE_TOLERANCE)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x=[")?;
        for (i, v) in self.x.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "] m={}", self.mode)
    }
}

/// One jump of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub departure: State,
    pub arrival: State,
    /// True when the jump was triggered by the flow reaching the boundary.
    pub forced: bool,
}

/// Skeleton of a trajectory: initial state and the ordered jumps.
///
/// `terminal` (the state at `horizon`) and `critical_time` (first entrance
/// in the critical region, if any) are derived summaries kept alongside so
/// that callers do not need the model to read them back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySkeleton {
    pub initial: State,
    pub horizon: f64,
    pub jumps: Vec<JumpRecord>,
    pub terminal: State,
    pub critical_time: Option<f64>,
}

impl TrajectorySkeleton {
    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }

    pub fn spontaneous_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| !j.forced).count()
    }

    /// Same initial state, same jump times (relative 1e-9) and same arrivals.
    pub fn same_path(&self, other: &TrajectorySkeleton) -> bool {
        self.initial.same_as(&other.initial)
            && self.jumps.len() == other.jumps.len()
            && self.jumps.iter().zip(&other.jumps).all(|(a, b)| {
                a.forced == b.forced
                    && (a.time - b.time).abs() <= 1e-9 * a.time.abs().max(1.0)
                    && a.arrival.same_as(&b.arrival)
            })
    }

    pub fn point_at_horizon(&self) -> PathPoint {
        PathPoint {
            time: self.horizon,
            state: self.terminal.clone(),
            failed: self.critical_time.is_some(),
        }
    }

    /// Check time ordering and that every jump actually changes the state.
    pub fn validate(&self) -> Result<()> {
        let mut last = 0.0;
        for (i, j) in self.jumps.iter().enumerate() {
            let ordered = if i == 0 { j.time >= 0.0 } else { j.time > last };
            if !ordered || j.time > self.horizon {
                return Err(Error::ModelValidation(format!("jump {i} at time {} out of order", j.time)));
            }
            if j.arrival.same_as(&j.departure) {
                return Err(Error::ModelValidation(format!("jump {i} lands on its departure state {}", j.departure)));
            }
            last = j.time;
        }
        Ok(())
    }
}

/// A point of a trajectory at a given time, with the sticky failure flag.
///
/// Particles of the estimators only carry this summary: the observable and
/// all shipped potentials depend on a path through its latest state and
/// whether it already visited the critical region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub time: f64,
    pub state: State,
    pub failed: bool,
}

/// Survival bookkeeping F̃ memorized at jump times, stored as log-survivals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub time: f64,
    /// log F̃(s⁻): survival just before the jump.
    pub log_pre: f64,
    /// log F̃(s): survival once the jump landed on the recorded arrival.
    pub log_post: f64,
}

impl Breakpoint {
    pub fn pre(&self) -> f64 {
        self.log_pre.exp()
    }

    pub fn post(&self) -> f64 {
        self.log_post.exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub breakpoints: Vec<Breakpoint>,
    /// log of the probability of the whole (preponderant) path.
    pub log_terminal: f64,
    /// False once the path took a spontaneous jump; the record then stops
    /// at that jump and `log_terminal` holds log F̃ just before it.
    pub preponderant: bool,
}

impl SurvivalRecord {
    pub fn terminal(&self) -> f64 {
        self.log_terminal.exp()
    }

    /// 1 - terminal, without cancellation when the terminal is close to 1.
    pub fn avoid_mass(&self) -> f64 {
        -self.log_terminal.exp_m1()
    }

    /// Rebuild the terminal from interval survivals and jump ratios.
    pub fn reconstructed_log_terminal(&self) -> f64 {
        let mut log_post_prev = 0.0;
        let mut acc = 0.0;
        for b in &self.breakpoints {
            acc += b.log_pre - log_post_prev;
            acc += b.log_post - b.log_pre;
            log_post_prev = b.log_post;
        }
        acc + (self.log_terminal - log_post_prev)
    }

    /// The sequence 1 ≥ pre₀ ≥ post₀ ≥ … ≥ terminal > 0 must be nonincreasing.
    pub fn validate(&self) -> Result<()> {
        let mut prev = 0.0f64;
        for b in &self.breakpoints {
            if b.log_pre > prev + 1e-15 || b.log_post > b.log_pre + 1e-15 {
                return Err(Error::ModelValidation(format!("survival increases at t = {}", b.time)));
            }
            prev = b.log_post;
        }
        if self.log_terminal > prev + 1e-15 || !self.log_terminal.is_finite() {
            return Err(Error::ModelValidation("terminal survival out of range".into()));
        }
        Ok(())
    }
}

/// Discrete jump law from a departure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub entries: Vec<(State, f64)>,
    /// Index of the control-target arrival (no failure on demand), for
    /// boundary kernels.
    pub nominal: Option<usize>,
}

impl TransitionTable {
    pub fn single(arrival: State) -> Self {
        TransitionTable { entries: vec![(arrival, 1.0)], nominal: Some(0) }
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn probability_of(&self, z: &State) -> f64 {
        self.entries.iter().filter(|(s, _)| s.same_as(z)).map(|(_, p)| p).sum()
    }

    pub fn nominal_probability(&self) -> Option<f64> {
        self.nominal.map(|i| self.entries[i].1)
    }

    /// Check normalization, distinct arrivals and no self-loop.
    pub fn validate(&self, departure: &State) -> Result<()> {
        let mass = self.total_mass();
        if (mass - 1.0).abs() > KERNEL_MASS_TOLERANCE {
            return Err(Error::ModelValidation(format!(
                "kernel at {departure} has total mass {mass}"
            )));
        }
        for (i, (a, p)) in self.entries.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::ModelValidation(format!("kernel at {departure}: probability {p} for {a}")));
            }
            if a.same_as(departure) {
                return Err(Error::ModelValidation(format!("kernel at {departure} can jump onto itself")));
            }
            if self.entries[..i].iter().any(|(b, _)| b.same_as(a)) {
                return Err(Error::ModelValidation(format!("kernel at {departure} lists {a} twice")));
            }
        }
        Ok(())
    }

    /// Inverse-cdf draw; `u` uniform on [0, 1). Returns the entry index.
    pub fn pick(&self, u: f64) -> usize {
        let target = u * self.total_mass();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, (_, p)) in self.entries.iter().enumerate() {
            if *p > 0.0 {
                last_positive = i;
                acc += p;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    /// The table conditioned on not landing on entry `excluded`.
    pub fn excluding(&self, excluded: usize) -> Option<TransitionTable> {
        let rest = self.total_mass() - self.entries[excluded].1;
        if rest <= 0.0 {
            return None;
        }
        let entries = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, (_, p))| *i != excluded && *p > 0.0)
            .map(|(_, (s, p))| (s.clone(), p / rest))
            .collect();
        Some(TransitionTable { entries, nominal: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Status::*;

    fn table() -> TransitionTable {
        TransitionTable {
            entries: vec![
                (State::new(&[15.0], &[On, Off]), 0.99),
                (State::new(&[15.0], &[Failed, On]), 0.0099),
                (State::new(&[15.0], &[Failed, Failed]), 0.0001),
            ],
            nominal: Some(0),
        }
    }

    #[test]
    fn state_equality_is_structural() {
        let a = State::new(&[1.0], &[On, Off]);
        assert!(a.same_as(&State::new(&[1.0 + 1e-13], &[On, Off])));
        assert!(!a.same_as(&State::new(&[1.0 + 1e-9], &[On, Off])));
        assert!(!a.same_as(&State::new(&[1.0], &[Off, Off])));
    }

    #[test]
    fn mode_counts() {
        let m = Mode::new(&[On, Failed]);
        assert_eq!(m.working(), 1);
        assert!(m.any_on());
        assert!(!m.all_failed());
        assert_eq!(m.with(0, Failed).working(), 0);
        assert_eq!(m.to_string(), "(On,F)");
    }

    #[test]
    fn table_validation_catches_bad_mass_and_self_loops() {
        let dep = State::new(&[15.0], &[Off, Off]);
        table().validate(&dep).unwrap();

        let mut short = table();
        short.entries[0].1 = 0.98;
        assert!(matches!(short.validate(&dep), Err(Error::ModelValidation(_))));

        let looping = TransitionTable::single(dep.clone());
        assert!(looping.validate(&dep).is_err());
    }

    #[test]
    fn excluding_renormalizes() {
        let t = table().excluding(0).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!((t.total_mass() - 1.0).abs() < 1e-12);
        assert!((t.entries[0].1 - 0.99).abs() < 1e-12);
        assert!(TransitionTable::single(State::new(&[0.0], &[On])).excluding(0).is_none());
    }

    #[test]
    fn pick_follows_cumulative_mass() {
        let t = table();
        assert_eq!(t.pick(0.0), 0);
        assert_eq!(t.pick(0.989), 0);
        assert_eq!(t.pick(0.995), 1);
        assert_eq!(t.pick(0.99995), 2);
        assert_eq!(t.pick(1.0 - 1e-17), 2);
    }

    #[test]
    fn survival_record_reconstructs_terminal() {
        let rec = SurvivalRecord {
            breakpoints: vec![
                Breakpoint { time: 1.0, log_pre: -0.1, log_post: -0.1 + 0.99f64.ln() },
                Breakpoint { time: 2.0, log_pre: -0.3, log_post: -0.3 + 0.5f64.ln() },
            ],
            log_terminal: -1.5,
            preponderant: true,
        };
        rec.validate().unwrap();
        assert!((rec.reconstructed_log_terminal() - rec.log_terminal).abs() < 1e-12);
        assert!((rec.avoid_mass() - (1.0 - (-1.5f64).exp())).abs() < 1e-15);
    }
}
