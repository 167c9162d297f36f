//! Exact trajectory simulation and preponderant extensions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::PdmpModel;
use crate::numeric::bisect_increasing;
use crate::rng::{exp1, open01};
use crate::state::{Breakpoint, JumpRecord, State, SurvivalRecord, TrajectorySkeleton, TransitionTable};

/// Time tolerance of the Λ inversion.
pub const JUMP_TIME_TOL: f64 = 1e-10;

/// States whose boundary-hit time is below this are treated as boundary states.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Jumps allowed in one segment before the model is declared Zeno.
const MAX_JUMPS_PER_SEGMENT: usize = 1_000_000;

/// Flow `z` over `dt`, rejecting durations past the boundary.
pub fn flow_advance<M: PdmpModel + ?Sized>(model: &M, z: &State, dt: f64) -> Result<State> {
    check_duration(model, z, dt)?;
    if dt == 0.0 {
        return Ok(z.clone());
    }
    Ok(model.flow(z, dt))
}

/// Λ_z(t), rejecting horizons past the boundary.
pub fn cumulative_rate<M: PdmpModel + ?Sized>(model: &M, z: &State, t: f64) -> Result<f64> {
    check_duration(model, z, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(model.cumulative_rate(z, t))
}

fn check_duration<M: PdmpModel + ?Sized>(model: &M, z: &State, dt: f64) -> Result<()> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative duration {dt}")));
    }
    let t_star = model.boundary_hit_time(z);
    if dt > t_star {
        return Err(Error::FlowDomain { dt, boundary_time: t_star });
    }
    Ok(())
}

/// Outcome of one jump-time draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpTime {
    pub time: f64,
    pub forced: bool,
}

/// Draw the time to the next jump from `z` by inverse transform.
pub fn sample_jump_time<M: PdmpModel + ?Sized, R: Rng + ?Sized>(model: &M, z: &State, rng: &mut R) -> Result<JumpTime> {
    let e = exp1(rng);
    match next_jump(model, z, e, f64::INFINITY)? {
        Some(j) => Ok(JumpTime { time: j.time, forced: j.forced }),
        None => Err(Error::ModelValidation(format!("no jump can ever occur from {z}"))),
    }
}

#[derive(Clone, Copy, Debug)]
struct NextJump {
    time: f64,
    forced: bool,
    /// Λ over `[0, time]`.
    hazard: f64,
}

/// Next jump within `limit` given the exponential mark `e`.
///
/// `None` means the flow reaches `limit` first. With `limit` infinite and no
/// boundary, the bracket is grown until Λ exceeds `e`.
fn next_jump<M: PdmpModel + ?Sized>(model: &M, z: &State, e: f64, limit: f64) -> Result<Option<NextJump>> {
    let t_star = model.boundary_hit_time(z);
    let cap = t_star.min(limit);
    if cap.is_infinite() {
        let mut hi = 1.0;
        while model.cumulative_rate(z, hi) < e {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::ModelValidation(format!("no jump can ever occur from {z}")));
            }
        }
        let s = bisect_increasing(|s| model.cumulative_rate(z, s), e, 0.0, hi, JUMP_TIME_TOL, 200);
        return Ok(Some(NextJump { time: s, forced: false, hazard: e }));
    }
    let total = model.cumulative_rate(z, cap);
    if e < total {
        let s = bisect_increasing(|s| model.cumulative_rate(z, s), e, 0.0, cap, JUMP_TIME_TOL, 200);
        // Keep spontaneous jumps strictly inside the interval.
        let s = s.clamp(f64::MIN_POSITIVE, cap);
        Ok(Some(NextJump { time: s, forced: false, hazard: e }))
    } else if t_star <= limit {
        Ok(Some(NextJump { time: t_star, forced: true, hazard: total }))
    } else {
        Ok(None)
    }
}

/// Jump law from a pre-jump state: boundary kernel on ∂E, interior otherwise.
pub fn jump_distribution<M: PdmpModel + ?Sized>(model: &M, z_minus: &State) -> Result<TransitionTable> {
    if model.boundary_hit_time(z_minus) <= BOUNDARY_EPS {
        model.boundary_kernel(z_minus)
    } else {
        model.interior_kernel(z_minus)
    }
}

/// Receives the events of a simulated segment.
pub(crate) trait Recorder {
    /// Whether the recorder needs hazards; skipping them saves a Λ
    /// evaluation per segment.
    fn wants_survival(&self) -> bool {
        false
    }
    fn jump(&mut self, _record: JumpRecord, _hazard: f64, _log_kernel: f64) {}
    fn end(&mut self, _hazard: f64) {}
}

impl Recorder for () {}

/// Where a simulated segment ended.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentEnd {
    pub end: State,
    /// Absolute time of the first visit to the critical region, if any.
    pub critical_at: Option<f64>,
    pub jumps: usize,
}

/// Simulate from `start` over `[offset, offset + length]`, reporting to `rec`.
pub(crate) fn run_segment<M, R, C>(model: &M, start: State, offset: f64, length: f64, rng: &mut R, rec: &mut C) -> Result<SegmentEnd>
where
    M: PdmpModel + ?Sized,
    R: Rng + ?Sized,
    C: Recorder,
{
    let mut z = start;
    let mut t = 0.0;
    let mut critical_at = model.is_critical(&z).then_some(offset);
    let mut jumps = 0usize;
    loop {
        if jumps >= MAX_JUMPS_PER_SEGMENT {
            return Err(Error::ModelValidation(format!("more than {MAX_JUMPS_PER_SEGMENT} jumps in one segment")));
        }
        let remaining = length - t;
        if model.boundary_hit_time(&z) <= 0.0 {
            // State on the boundary: the forced jump fires before any flow.
            let table = model.boundary_kernel(&z)?;
            let (arrival, p) = table.entries[table.pick(open01(rng))].clone();
            if critical_at.is_none() && model.is_critical(&arrival) {
                critical_at = Some(offset + t);
            }
            rec.jump(JumpRecord { time: offset + t, departure: z, arrival: arrival.clone(), forced: true }, 0.0, p.ln());
            z = arrival;
            jumps += 1;
            continue;
        }
        match next_jump(model, &z, exp1(rng), remaining)? {
            Some(j) => {
                if critical_at.is_none() {
                    if let Some(c) = model.critical_entry_time(&z, j.time) {
                        critical_at = Some(offset + t + c);
                    }
                }
                let (departure, table) = if j.forced {
                    let d = model.boundary_state(&z, j.time);
                    let tab = model.boundary_kernel(&d)?;
                    (d, tab)
                } else {
                    let d = model.flow(&z, j.time);
                    let tab = model.interior_kernel(&d)?;
                    (d, tab)
                };
                let (arrival, p) = table.entries[table.pick(open01(rng))].clone();
                t += j.time;
                if j.forced && j.time == remaining {
                    t = length;
                }
                let time = offset + t;
                if critical_at.is_none() && model.is_critical(&arrival) {
                    critical_at = Some(time);
                }
                rec.jump(JumpRecord { time, departure, arrival: arrival.clone(), forced: j.forced }, j.hazard, p.ln());
                z = arrival;
                jumps += 1;
                if t >= length {
                    rec.end(0.0);
                    break;
                }
            }
            None => {
                if critical_at.is_none() {
                    if let Some(c) = model.critical_entry_time(&z, remaining) {
                        critical_at = Some(offset + t + c);
                    }
                }
                let hazard = if rec.wants_survival() { model.cumulative_rate(&z, remaining) } else { 0.0 };
                z = model.flow(&z, remaining);
                rec.end(hazard);
                break;
            }
        }
    }
    Ok(SegmentEnd { end: z, critical_at, jumps })
}

/// Builds the skeleton and the survival record of a simulated path.
pub(crate) struct SkeletonRecorder {
    pub jumps: Vec<JumpRecord>,
    pub breakpoints: Vec<Breakpoint>,
    pub log_survival: f64,
    pub log_terminal: f64,
    pub preponderant: bool,
}

impl SkeletonRecorder {
    pub fn new() -> Self {
        SkeletonRecorder { jumps: Vec::new(), breakpoints: Vec::new(), log_survival: 0.0, log_terminal: 0.0, preponderant: true }
    }

    pub fn record(self) -> SurvivalRecord {
        SurvivalRecord { breakpoints: self.breakpoints, log_terminal: self.log_terminal, preponderant: self.preponderant }
    }
}

impl Recorder for SkeletonRecorder {
    fn wants_survival(&self) -> bool {
        self.preponderant
    }

    fn jump(&mut self, record: JumpRecord, hazard: f64, log_kernel: f64) {
        if self.preponderant {
            let log_pre = self.log_survival - hazard;
            if record.forced {
                let log_post = log_pre + log_kernel;
                self.breakpoints.push(Breakpoint { time: record.time, log_pre, log_post });
                self.log_survival = log_post;
            } else {
                self.log_terminal = log_pre;
                self.preponderant = false;
            }
        }
        self.jumps.push(record);
    }

    fn end(&mut self, hazard: f64) {
        if self.preponderant {
            self.log_terminal = self.log_survival - hazard;
        }
    }
}

/// Simulate one trajectory of length `horizon` from `z0`.
pub fn simulate<M: PdmpModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    z0: &State,
    horizon: f64,
    rng: &mut R,
) -> Result<(TrajectorySkeleton, SurvivalRecord)> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let mut rec = SkeletonRecorder::new();
    let end = run_segment(model, z0.clone(), 0.0, horizon, rng, &mut rec)?;
    let skeleton = TrajectorySkeleton {
        initial: z0.clone(),
        horizon,
        jumps: std::mem::take(&mut rec.jumps),
        terminal: end.end,
        critical_time: end.critical_at,
    };
    Ok((skeleton, rec.record()))
}

/// Simulate a segment of length `dt` from `z` without building a skeleton.
pub fn propagate<M: PdmpModel + ?Sized, R: Rng + ?Sized>(model: &M, z: &State, dt: f64, rng: &mut R) -> Result<SegmentEnd> {
    run_segment(model, z.clone(), 0.0, dt, rng, &mut ())
}

/// The extension with no spontaneous jump and no failure on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct PreponderantExtension {
    pub segment: TrajectorySkeleton,
    /// Probability V(𝐚 | z) of following `segment` exactly.
    pub probability: f64,
    pub record: SurvivalRecord,
}

impl PreponderantExtension {
    /// State at the start of inter-jump interval `k`.
    pub fn interval_start(&self, k: usize) -> &State {
        if k == 0 {
            &self.segment.initial
        } else {
            &self.segment.jumps[k - 1].arrival
        }
    }
}

/// Compute the preponderant extension of duration `dt` from `z`.
pub fn preponderant_extension<M: PdmpModel + ?Sized>(model: &M, z: &State, dt: f64) -> Result<PreponderantExtension> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {dt}")));
    }
    let mut cur = z.clone();
    let mut t = 0.0;
    let mut log_survival = 0.0;
    let mut breakpoints = Vec::new();
    let mut jumps = Vec::new();
    let mut critical_at = model.is_critical(&cur).then_some(0.0);
    let log_terminal;
    loop {
        if jumps.len() >= MAX_JUMPS_PER_SEGMENT {
            return Err(Error::ModelValidation(format!("more than {MAX_JUMPS_PER_SEGMENT} jumps in one segment")));
        }
        let remaining = dt - t;
        let t_star = model.boundary_hit_time(&cur);
        if t_star <= remaining {
            let hazard = if t_star > 0.0 { model.cumulative_rate(&cur, t_star) } else { 0.0 };
            if critical_at.is_none() && t_star > 0.0 {
                critical_at = model.critical_entry_time(&cur, t_star).map(|c| t + c);
            }
            let departure = if t_star > 0.0 { model.boundary_state(&cur, t_star) } else { cur.clone() };
            let table = model.boundary_kernel(&departure)?;
            let nominal = table
                .nominal
                .filter(|&i| table.entries[i].1 > 0.0)
                .ok_or_else(|| Error::ModelValidation(format!("no failure-free branch at boundary state {departure}")))?;
            let (arrival, p) = table.entries[nominal].clone();
            t = if t_star == remaining { dt } else { t + t_star };
            let log_pre = log_survival - hazard;
            let log_post = log_pre + p.ln();
            breakpoints.push(Breakpoint { time: t, log_pre, log_post });
            log_survival = log_post;
            if critical_at.is_none() && model.is_critical(&arrival) {
                critical_at = Some(t);
            }
            jumps.push(JumpRecord { time: t, departure, arrival: arrival.clone(), forced: true });
            cur = arrival;
            if t >= dt {
                log_terminal = log_survival;
                break;
            }
        } else {
            let hazard = model.cumulative_rate(&cur, remaining);
            if critical_at.is_none() {
                critical_at = model.critical_entry_time(&cur, remaining).map(|c| t + c);
            }
            log_terminal = log_survival - hazard;
            cur = model.flow(&cur, remaining);
            break;
        }
    }
    let record = SurvivalRecord { breakpoints, log_terminal, preponderant: true };
    Ok(PreponderantExtension {
        segment: TrajectorySkeleton { initial: z.clone(), horizon: dt, jumps, terminal: cur, critical_time: critical_at },
        probability: log_terminal.exp(),
        record,
    })
}
