//! The behaviour a concrete PDMP must provide.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numeric;
use crate::state::{Mode, State, TransitionTable};

/// Spontaneous transitions out of a state: target mode and rate.
pub type RateList = SmallVec<[(Mode, f64); 4]>;

/// Relative tolerance of the default cumulative-rate quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

/// A piecewise deterministic Markov process with discrete jump kernels.
///
/// Implementations must be pure: every method is a function of its
/// arguments and the model's immutable parameters, so one model can be
/// shared by all workers.
pub trait PdmpModel: Send + Sync {
    fn name(&self) -> &str;

    /// Number of components in the mode tuple.
    fn components(&self) -> usize;

    fn initial_state(&self) -> State;

    /// Observation horizon of the reliability problem.
    fn horizon(&self) -> f64;

    /// Flow of `z` over `dt`, ignoring boundaries.
    fn flow(&self, z: &State, dt: f64) -> State;

    /// Time until the flow from `z` hits the boundary of its mode's region,
    /// `f64::INFINITY` when it never does. Zero for states on the boundary.
    fn boundary_hit_time(&self, z: &State) -> f64;

    fn transition_rates(&self, z: &State) -> RateList;

    fn total_rate(&self, z: &State) -> f64 {
        self.transition_rates(z).iter().map(|(_, r)| r).sum()
    }

    /// Integral of the total rate along the flow from `z` over `[0, t]`.
    ///
    /// The default integrates numerically; models with a closed form should
    /// override it.
    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        numeric::adaptive_simpson(|u| self.total_rate(&self.flow(z, u)), 0.0, t, QUADRATURE_REL_TOL)
    }

    /// Arrival state when the transition to `target` fires from `departure`.
    fn arrival(&self, departure: &State, target: &Mode) -> State {
        departure.with_mode(target.clone())
    }

    /// Departure state of the forced jump reached after `t_star`.
    ///
    /// Defaults to the flow; closed-form models may snap the physical
    /// variables onto the threshold to avoid rounding drift.
    fn boundary_state(&self, z: &State, t_star: f64) -> State {
        self.flow(z, t_star)
    }

    /// Jump law of a spontaneous jump from the interior state `z`.
    ///
    /// An arrival that lands on the boundary of its own mode (a heater
    /// failing below the low threshold, say) is resolved at once through the
    /// boundary kernel, so every arrival lies in the open region.
    fn interior_kernel(&self, z: &State) -> Result<TransitionTable> {
        let rates = self.transition_rates(z);
        let total: f64 = rates.iter().map(|(_, r)| r).sum();
        if total <= 0.0 {
            return Err(Error::UndefinedKernel(z.to_string()));
        }
        let mut entries: Vec<(State, f64)> = Vec::with_capacity(rates.len());
        let mut push = |arrival: State, p: f64| match entries.iter_mut().find(|(a, _)| a.same_as(&arrival)) {
            Some(e) => e.1 += p,
            None => entries.push((arrival, p)),
        };
        for (m, r) in rates.iter().filter(|(_, r)| *r > 0.0) {
            let arrival = self.arrival(z, m);
            let p = r / total;
            if self.boundary_hit_time(&arrival) <= 0.0 {
                for (a, q) in self.boundary_kernel(&arrival)?.entries {
                    push(a, p * q);
                }
            } else {
                push(arrival, p);
            }
        }
        Ok(TransitionTable { entries, nominal: None })
    }

    /// Jump law at a boundary state, with the control target marked nominal.
    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable>;

    /// Membership of the critical region D.
    fn is_critical(&self, z: &State) -> bool;

    /// First time in `[0, dt]` at which the flow from `z` is in D.
    ///
    /// The default scans 256 points and refines by bisection, which is only
    /// exact for regions entered once per segment. Closed-form models
    /// override it.
    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        scan_critical_entry(self, z, dt)
    }
}

impl<M: PdmpModel + ?Sized> PdmpModel for &M {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn components(&self) -> usize {
        (**self).components()
    }
    fn initial_state(&self) -> State {
        (**self).initial_state()
    }
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn flow(&self, z: &State, dt: f64) -> State {
        (**self).flow(z, dt)
    }
    fn boundary_hit_time(&self, z: &State) -> f64 {
        (**self).boundary_hit_time(z)
    }
    fn transition_rates(&self, z: &State) -> RateList {
        (**self).transition_rates(z)
    }
    fn total_rate(&self, z: &State) -> f64 {
        (**self).total_rate(z)
    }
    fn cumulative_rate(&self, z: &State, t: f64) -> f64 {
        (**self).cumulative_rate(z, t)
    }
    fn arrival(&self, departure: &State, target: &Mode) -> State {
        (**self).arrival(departure, target)
    }
    fn boundary_state(&self, z: &State, t_star: f64) -> State {
        (**self).boundary_state(z, t_star)
    }
    fn interior_kernel(&self, z: &State) -> Result<TransitionTable> {
        (**self).interior_kernel(z)
    }
    fn boundary_kernel(&self, z: &State) -> Result<TransitionTable> {
        (**self).boundary_kernel(z)
    }
    fn is_critical(&self, z: &State) -> bool {
        (**self).is_critical(z)
    }
    fn critical_entry_time(&self, z: &State, dt: f64) -> Option<f64> {
        (**self).critical_entry_time(z, dt)
    }
}

/// First entrance in D along the flow by scanning 256 points, refined by
/// bisection to 1e-10.
pub fn scan_critical_entry<M: PdmpModel + ?Sized>(model: &M, z: &State, dt: f64) -> Option<f64> {
    if model.is_critical(z) {
        return Some(0.0);
    }
    let n = 256;
    let mut prev = 0.0;
    for i in 1..=n {
        let t = dt * i as f64 / n as f64;
        if model.is_critical(&model.flow(z, t)) {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if model.is_critical(&model.flow(z, mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = t;
    }
    None
}

/// Boundary time of a numerically integrated flow.
///
/// Advances `z` by `step` until `inside` turns false, then bisects the last
/// bracket to 1e-9 in time. Gives up (returns infinity) past `max_time`.
pub fn numeric_boundary_time<A, I>(z: &State, advance: A, inside: I, max_time: f64, step: f64) -> f64
where
    A: Fn(&State, f64) -> State,
    I: Fn(&State) -> bool,
{
    if !inside(z) {
        return 0.0;
    }
    let mut cur = z.clone();
    let mut t = 0.0;
    while t < max_time {
        let next = advance(&cur, step);
        if !inside(&next) {
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if inside(&advance(&cur, mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return t + hi;
        }
        cur = next;
        t += step;
    }
    f64::INFINITY
}
