//! Independent ground truth for the test suites: closed forms, rejection
//! sampling and a nested Monte Carlo approximation of the optimal potential.

pub mod stats;

use rand::Rng;

use crate::dynamics::{propagate, simulate, PreponderantExtension};
use crate::error::{Error, Result};
use crate::model::PdmpModel;
use crate::rng::{stream, Domain};
use crate::samplers::Observable;
use crate::state::{PathPoint, TrajectorySkeleton};

/// Default try budget of [`rejection_extend`].
pub const REJECTION_CAP: u64 = 10_000_000;

/// P(both units failed by `tf`) for two cold-standby units of rate λ.
pub fn cold_standby_exact_p(lambda: f64, tf: f64) -> f64 {
    let lt = lambda * tf;
    if lt == 0.0 {
        return 0.0;
    }
    // 1 − e^{−x}(1+x), written to stay accurate for small x.
    -(-lt).exp_m1() - lt * (-lt).exp()
}

/// Resimulate from the start of `ext` until the path differs from it.
///
/// Returns the accepted path and the number of tries.
pub fn rejection_extend<M: PdmpModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    ext: &PreponderantExtension,
    rng: &mut R,
    cap: u64,
) -> Result<(TrajectorySkeleton, u64)> {
    let seg = &ext.segment;
    for tries in 1..=cap {
        let (path, _) = simulate(model, &seg.initial, seg.horizon, rng)?;
        if !path.same_path(seg) {
            return Ok((path, tries));
        }
    }
    Err(Error::OracleExhausted(cap))
}

/// Nested Monte Carlo estimate of the optimal potential G*_k and its
/// standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GStarEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Budgets of the nested estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NestedBudget {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
}

impl Default for NestedBudget {
    fn default() -> Self {
        NestedBudget { outer: 100, inner: 1000, seed: 0 }
    }
}

/// E[E[h | Z_{τ_n}]² | Z_{τ_from} = from] by outer draws of Z_{τ_to}.
///
/// Returns the mean and its standard error over the outer draws.
fn conditional_second_moment<M: PdmpModel + ?Sized>(
    model: &M,
    h: Observable,
    grid: &[f64],
    from: &PathPoint,
    to: usize,
    budget: NestedBudget,
    tag: u32,
) -> Result<(f64, f64)> {
    let horizon = *grid.last().expect("nonempty grid");
    let mut squares = Vec::with_capacity(budget.outer);
    for o in 0..budget.outer {
        let mut rng = stream(budget.seed, Domain::Oracle, tag, o as u32);
        let mid = advance(model, from, grid[to], &mut rng)?;
        let mut sum = 0.0;
        for _ in 0..budget.inner {
            let end = advance(model, &mid, horizon, &mut rng)?;
            sum += h.value(&end);
        }
        let m = sum / budget.inner as f64;
        squares.push(m * m);
    }
    let (mean, var) = crate::samplers::mean_and_variance(&squares);
    Ok((mean, (var / budget.outer as f64).sqrt()))
}

fn advance<M: PdmpModel + ?Sized, R: Rng + ?Sized>(model: &M, from: &PathPoint, to: f64, rng: &mut R) -> Result<PathPoint> {
    if to <= from.time {
        return Ok(from.clone());
    }
    let end = propagate(model, &from.state, to - from.time, rng)?;
    Ok(PathPoint { time: to, failed: from.failed || end.critical_at.is_some(), state: end.end })
}

/// Nested Monte Carlo approximation of G*_k at the prefix `points`
/// (`points[s]` is the path at `grid[s]`, for s ≤ k).
///
/// Zero when the denominator estimate vanishes.
pub fn nested_g_star<M: PdmpModel + ?Sized>(
    model: &M,
    h: Observable,
    grid: &[f64],
    points: &[PathPoint],
    k: usize,
    budget: NestedBudget,
) -> Result<GStarEstimate> {
    if k + 1 >= grid.len() || points.len() <= k {
        return Err(Error::InvalidParameter(format!("prefix of length {} does not cover step {k}", points.len())));
    }
    let (num, num_se) = conditional_second_moment(model, h, grid, &points[k], k + 1, budget, 2 * k as u32)?;
    if k == 0 {
        let value = num.sqrt();
        let se = if value > 0.0 { num_se / (2.0 * value) } else { 0.0 };
        return Ok(GStarEstimate { value, std_error: se });
    }
    let (den, den_se) = conditional_second_moment(model, h, grid, &points[k - 1], k, budget, 2 * k as u32 + 1)?;
    if den <= 0.0 {
        return Ok(GStarEstimate { value: 0.0, std_error: 0.0 });
    }
    let ratio = num / den;
    let value = ratio.sqrt();
    let rel = if num > 0.0 { ((num_se / num).powi(2) + (den_se / den).powi(2)).sqrt() } else { 0.0 };
    Ok(GStarEstimate { value, std_error: 0.5 * value * rel })
}
