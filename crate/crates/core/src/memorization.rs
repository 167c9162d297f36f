//! One-shot sampling of extensions conditioned to leave the preponderant path.
//!
//! The survival function F̃ of the preponderant extension is stored in log
//! form at its forced jumps. Drawing Ũ uniformly on (p, 1) and inverting F̃
//! gives the time τ at which a conditioned path departs from it, either
//! inside an inter-jump interval (a spontaneous jump) or at one of the
//! forced jumps (a failure on demand). The rest of the segment is then
//! simulated without conditioning.

use rand::Rng;

use crate::dynamics::{run_segment, PreponderantExtension, Recorder, SegmentEnd, SkeletonRecorder, JUMP_TIME_TOL};
use crate::error::{Error, Result};
use crate::model::PdmpModel;
use crate::numeric::bisect_increasing;
use crate::rng::open01;
use crate::state::{JumpRecord, SurvivalRecord, TrajectorySkeleton};

/// Where the conditioned path leaves the preponderant one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferentiationDraw {
    /// Time since the start of the segment, in (0, dt].
    pub tau: f64,
    /// True when τ is the time of a forced jump of the preponderant path.
    pub at_boundary_jump: bool,
    /// Index of the inter-jump interval, or of the forced jump, containing τ.
    pub segment_index: usize,
}

/// Piece of F̃ hit by a hazard level H = −ln Ũ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Located {
    /// Inside inter-jump interval `k`, `hazard` past its start.
    Interval { k: usize, hazard: f64 },
    /// Across the discontinuity of forced jump `k`.
    Jump { k: usize },
}

/// Invert F̃ at hazard level `h` (0 < h < −ln terminal).
///
/// A level exactly on a discontinuity is sent to the jump, and intervals of
/// zero mass are skipped by construction.
pub fn locate(record: &SurvivalRecord, h: f64) -> Located {
    let n = record.breakpoints.len();
    let mut start = 0.0;
    let mut last_positive = None;
    for k in 0..=n {
        let end = if k < n { -record.breakpoints[k].log_pre } else { -record.log_terminal };
        if end > start {
            last_positive = Some(Located::Interval { k, hazard: end - start });
            if h < end {
                return Located::Interval { k, hazard: (h - start).max(0.0) };
            }
        }
        if k < n {
            let post = -record.breakpoints[k].log_post;
            if post > end {
                last_positive = Some(Located::Jump { k });
                if h < post {
                    return Located::Jump { k };
                }
            }
            start = post;
        }
    }
    // Rounding pushed h past the terminal level: use the last piece with mass.
    match last_positive {
        Some(Located::Interval { k, hazard }) => Located::Interval { k, hazard: hazard * (1.0 - 1e-15) },
        Some(jump) => jump,
        None => Located::Interval { k: n, hazard: 0.0 },
    }
}

/// Hazard level −ln Ũ for Ũ uniform on (terminal, 1), from `w` uniform on (0, 1).
pub fn hazard_level(record: &SurvivalRecord, w: f64) -> f64 {
    -(-record.avoid_mass() * w).ln_1p()
}

fn check_record(record: &SurvivalRecord) -> Result<()> {
    if !record.preponderant {
        return Err(Error::DegenerateRecord("record of a path with spontaneous jumps".into()));
    }
    if !(record.avoid_mass() > 0.0) {
        return Err(Error::DegenerateRecord("the preponderant extension has probability 1".into()));
    }
    Ok(())
}

/// Draw the differentiation time of a path conditioned to leave `ext`.
pub fn sample_differentiation_time<M: PdmpModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    ext: &PreponderantExtension,
    rng: &mut R,
) -> Result<DifferentiationDraw> {
    differentiation_time(model, ext, open01(rng))
}

/// Differentiation time for the uniform `w` on (0, 1), i.e. for
/// Ũ = 1 − (1 − terminal)·w. Decreasing in Ũ.
pub fn differentiation_time<M: PdmpModel + ?Sized>(model: &M, ext: &PreponderantExtension, w: f64) -> Result<DifferentiationDraw> {
    check_record(&ext.record)?;
    let h = hazard_level(&ext.record, w);
    Ok(resolve(model, ext, locate(&ext.record, h)))
}

fn interval_bounds(ext: &PreponderantExtension, k: usize) -> (f64, f64) {
    let jumps = &ext.segment.jumps;
    let start = if k == 0 { 0.0 } else { jumps[k - 1].time };
    let end = if k < jumps.len() { jumps[k].time } else { ext.segment.horizon };
    (start, end)
}

fn resolve<M: PdmpModel + ?Sized>(model: &M, ext: &PreponderantExtension, loc: Located) -> DifferentiationDraw {
    match loc {
        Located::Jump { k } => DifferentiationDraw { tau: ext.segment.jumps[k].time, at_boundary_jump: true, segment_index: k },
        Located::Interval { k, hazard } => {
            let (start, end) = interval_bounds(ext, k);
            let z = ext.interval_start(k);
            let len = end - start;
            let s = bisect_increasing(|s| model.cumulative_rate(z, s), hazard, 0.0, len, JUMP_TIME_TOL, 200);
            let s = s.clamp(f64::MIN_POSITIVE, len);
            DifferentiationDraw { tau: start + s, at_boundary_jump: false, segment_index: k }
        }
    }
}

fn avoid_with<M, R, C>(model: &M, ext: &PreponderantExtension, rng: &mut R, rec: &mut C) -> Result<(DifferentiationDraw, SegmentEnd)>
where
    M: PdmpModel + ?Sized,
    R: Rng + ?Sized,
    C: Recorder,
{
    let draw = sample_differentiation_time(model, ext, rng)?;
    let k = draw.segment_index;
    let jumps = &ext.segment.jumps;
    let copied = if draw.at_boundary_jump { k } else { k.min(jumps.len()) };
    for j in &jumps[..copied] {
        rec.jump(j.clone(), 0.0, 0.0);
    }
    let (departure, table, forced) = if draw.at_boundary_jump {
        let departure = jumps[k].departure.clone();
        let full = model.boundary_kernel(&departure)?;
        let nominal = full.nominal.ok_or_else(|| Error::ModelValidation(format!("boundary kernel at {departure} has no nominal branch")))?;
        let table = full
            .excluding(nominal)
            .ok_or_else(|| Error::DegenerateRecord(format!("no failure on demand possible at {departure}")))?;
        (departure, table, true)
    } else {
        let (start, _) = interval_bounds(ext, k);
        let departure = model.flow(ext.interval_start(k), draw.tau - start);
        let table = model.interior_kernel(&departure)?;
        (departure, table, false)
    };
    let (arrival, _) = table.entries[table.pick(open01(rng))].clone();
    let mut critical_at = ext.segment.critical_time.filter(|&c| c <= draw.tau);
    if critical_at.is_none() && model.is_critical(&arrival) {
        critical_at = Some(draw.tau);
    }
    rec.jump(JumpRecord { time: draw.tau, departure, arrival: arrival.clone(), forced }, 0.0, 0.0);
    let remaining = ext.segment.horizon - draw.tau;
    let mut end = if remaining > 0.0 {
        run_segment(model, arrival, draw.tau, remaining, rng, rec)?
    } else {
        SegmentEnd { end: arrival, critical_at: None, jumps: 0 }
    };
    end.critical_at = critical_at.or(end.critical_at);
    end.jumps += copied + 1;
    Ok((draw, end))
}

/// Extension of duration `ext.segment.horizon` conditioned to differ from
/// the preponderant extension `ext`, drawn without rejection.
pub fn sample_avoiding_extension<M: PdmpModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    ext: &PreponderantExtension,
    rng: &mut R,
) -> Result<(TrajectorySkeleton, DifferentiationDraw)> {
    let mut rec = NoSurvival(SkeletonRecorder::new());
    let (draw, end) = avoid_with(model, ext, rng, &mut rec)?;
    let skeleton = TrajectorySkeleton {
        initial: ext.segment.initial.clone(),
        horizon: ext.segment.horizon,
        jumps: rec.0.jumps,
        terminal: end.end,
        critical_time: end.critical_at,
    };
    Ok((skeleton, draw))
}

/// Endpoint-only variant of [`sample_avoiding_extension`] used by IPS+M.
pub fn sample_avoiding_end<M: PdmpModel + ?Sized, R: Rng + ?Sized>(model: &M, ext: &PreponderantExtension, rng: &mut R) -> Result<SegmentEnd> {
    avoid_with(model, ext, rng, &mut ()).map(|(_, end)| end)
}

/// Collects jumps without survival bookkeeping.
struct NoSurvival(SkeletonRecorder);

impl Recorder for NoSurvival {
    fn jump(&mut self, record: JumpRecord, _hazard: f64, _log_kernel: f64) {
        self.0.jumps.push(record);
    }
}
