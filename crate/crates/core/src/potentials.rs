//! Potential functions scoring partial trajectories at the grid times.
//!
//! Particles only carry a [`PathPoint`] (state at the grid time and whether
//! the path already failed), which is all the shipped potentials look at.
//! Ratio-form potentials also need the value at the previous grid time; it
//! travels with the particle as the `carried` scalar.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PdmpModel;
use crate::state::{PathPoint, State, TrajectorySkeleton};

/// Number of non-failed components, b(z).
pub fn working_components(z: &State) -> usize {
    z.mode.working()
}

/// Positive time profile L(t) multiplying U_α.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum TimeProfile {
    #[default]
    Constant,
    /// L(t) = exp(rate · t).
    Exponential { rate: f64 },
}

impl TimeProfile {
    pub fn log_value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 0.0,
            TimeProfile::Exponential { rate } => rate * t,
        }
    }
}

/// The shipped potential families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", deny_unknown_fields)]
pub enum PotentialSpec {
    /// G₀ = U_α, G_k = U_α(k) / U_α(k−1).
    #[serde(rename_all = "camelCase")]
    UAlpha {
        alpha: f64,
        #[serde(default)]
        profile: TimeProfile,
    },
    /// G_k = exp(α₁ (xlim − X) + α₂ (b + 1)²), used directly.
    ///
    /// Paths that already failed are scored at their entrance in D
    /// (X = xlim, no working valve), as for a process stopped there.
    #[serde(rename_all = "camelCase")]
    DamExponential { alpha1: f64, alpha2: f64, xlim: f64 },
    Constant { value: f64 },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PotentialSpec::UAlpha { alpha, profile } => {
                alpha.is_finite()
                    && match profile {
                        TimeProfile::Constant => true,
                        TimeProfile::Exponential { rate } => rate.is_finite(),
                    }
            }
            PotentialSpec::DamExponential { alpha1, alpha2, xlim } => alpha1.is_finite() && alpha2.is_finite() && xlim.is_finite(),
            PotentialSpec::Constant { value } => value.is_finite() && *value >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid potential {self:?}")))
        }
    }

    /// Short label for result tables.
    pub fn label(&self) -> String {
        match self {
            PotentialSpec::UAlpha { alpha, .. } => format!("alpha={alpha}"),
            PotentialSpec::DamExponential { alpha1, alpha2, .. } => format!("alpha1={alpha1};alpha2={alpha2}"),
            PotentialSpec::Constant { value } => format!("constant={value}"),
        }
    }
}

/// A potential evaluated on particle summaries.
pub trait Potential: Send + Sync {
    /// log G_k at `point`, given the scalar carried from step k−1.
    ///
    /// Returns the log-potential and the scalar to carry to step k+1.
    /// `carried` is 0 at step 0.
    fn log_potential(&self, k: usize, point: &PathPoint, carried: f64) -> (f64, f64);
}

/// log U_α at a path point.
pub fn log_u_alpha(point: &PathPoint, alpha: f64, profile: &TimeProfile) -> f64 {
    if point.failed {
        return 0.0;
    }
    let b = working_components(&point.state) as f64;
    -alpha * (b + 1.0).powi(2) + profile.log_value(point.time)
}

impl Potential for PotentialSpec {
    fn log_potential(&self, k: usize, point: &PathPoint, carried: f64) -> (f64, f64) {
        match self {
            PotentialSpec::UAlpha { alpha, profile } => {
                let lu = log_u_alpha(point, *alpha, profile);
                let lg = if k == 0 { lu } else { lu - carried };
                (lg, lu)
            }
            PotentialSpec::DamExponential { alpha1, alpha2, xlim } => {
                if point.failed {
                    return (*alpha2, carried);
                }
                let b = working_components(&point.state) as f64;
                (alpha1 * (xlim - point.state.x[0]) + alpha2 * (b + 1.0).powi(2), carried)
            }
            PotentialSpec::Constant { value } => (value.ln(), carried),
        }
    }
}

/// Point of a skeleton at time `t`, reconstructed with the model's flow.
pub fn point_at<M: PdmpModel + ?Sized>(model: &M, traj: &TrajectorySkeleton, t: f64) -> PathPoint {
    let (start_time, start) = traj
        .jumps
        .iter()
        .rev()
        .find(|j| j.time <= t)
        .map(|j| (j.time, &j.arrival))
        .unwrap_or((0.0, &traj.initial));
    let state = if t > start_time { model.flow(start, t - start_time) } else { start.clone() };
    PathPoint { time: t, state, failed: traj.critical_time.is_some_and(|c| c <= t) }
}

/// U_α of a trajectory at time `t`.
pub fn u_alpha<M: PdmpModel + ?Sized>(model: &M, traj: &TrajectorySkeleton, t: f64, alpha: f64, profile: &TimeProfile) -> f64 {
    log_u_alpha(&point_at(model, traj, t), alpha, profile).exp()
}

/// G_k of a full trajectory on the subdivision `grid` (τ₀ = 0, …, τ_n).
pub fn potential_at_step<M: PdmpModel + ?Sized>(model: &M, traj: &TrajectorySkeleton, k: usize, grid: &[f64], spec: &dyn Potential) -> f64 {
    let mut carried = 0.0;
    let mut lg = 0.0;
    for (s, &t) in grid.iter().enumerate().take(k + 1) {
        let (g, c) = spec.log_potential(s, &point_at(model, traj, t), carried);
        lg = g;
        carried = c;
    }
    lg.exp()
}
