//! Regeneration-based stationary estimation. Arrivals into an empty system
//! split the path into independent, identically distributed cycles, so
//! occupancy fractions become ratio estimators with honest standard errors
//! and no burn-in heuristics.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::engine::{Engine, SimError};
use super::rng::{stream, StreamRole};
use super::{EventKind, SimulatorConfig, Termination};
use crate::analysis::binner::StateBinner;
use crate::analysis::pmf::{StateTag, TagPmf};
use crate::model::{ArrivalLaw, ServiceLaw, SystemState};

/// One complete cycle: from an arrival into an empty system up to (and
/// including) the next such arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationCycle {
    pub duration: f64,
    /// Time spent in each occupancy cell over the cycle.
    pub occupation: BTreeMap<StateTag, f64>,
}

/// Ratio-estimator summary over complete cycles. For cell `g` the point
/// estimate is `sum_i Y_i(g) / sum_i D_i` and the standard error comes from
/// the linearized residuals `Y_i - R * D_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenEstimate {
    pub pmf: TagPmf,
    pub stderr: BTreeMap<StateTag, f64>,
    pub mean_cycle: f64,
    pub cycles_used: usize,
    /// Attempted cycles that exceeded the horizon or the event cap.
    pub discarded: usize,
    /// Set when more than 1% of attempts were discarded; the estimate is
    /// then biased towards short cycles and should not be trusted.
    pub high_discard_fraction: bool,
}

const DISCARD_WARN_FRACTION: f64 = 0.01;

/// Simulates `cycles` regeneration cycles (one replica stream each) and
/// aggregates them. Cycles that fail to complete within the configured
/// horizon or event cap are discarded and counted.
pub fn regenerative_cycles(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    binner: &StateBinner,
    cycles: usize,
) -> Result<(Vec<RegenerationCycle>, RegenEstimate), SimError> {
    let attempts: Vec<Option<RegenerationCycle>> = (0..cycles as u64)
        .into_par_iter()
        .map(|r| one_cycle(cfg, arrival, service, binner, r))
        .collect::<Result<_, _>>()?;
    let discarded = attempts.iter().filter(|c| c.is_none()).count();
    let complete: Vec<RegenerationCycle> = attempts.into_iter().flatten().collect();
    if complete.is_empty() {
        return Err(SimError::NoCompleteCycles);
    }

    let total_duration: f64 = complete.iter().map(|c| c.duration).sum();
    let mut totals: BTreeMap<StateTag, f64> = BTreeMap::new();
    for c in &complete {
        for (&tag, &w) in &c.occupation {
            *totals.entry(tag).or_insert(0.0) += w;
        }
    }
    let n = complete.len() as f64;
    let mean_cycle = total_duration / n;
    let mut stderr = BTreeMap::new();
    let mut weights = BTreeMap::new();
    for (&tag, &y_total) in &totals {
        let ratio = y_total / total_duration;
        let ss: f64 = complete
            .iter()
            .map(|c| {
                let y = c.occupation.get(&tag).copied().unwrap_or(0.0);
                (y - ratio * c.duration).powi(2)
            })
            .sum();
        let s = (ss / (n - 1.0).max(1.0)).sqrt();
        stderr.insert(tag, s / (mean_cycle * n.sqrt()));
        weights.insert(tag, ratio);
    }
    let pmf = TagPmf::new(weights).expect("ratios sum to one by construction");
    let estimate = RegenEstimate {
        pmf,
        stderr,
        mean_cycle,
        cycles_used: complete.len(),
        discarded,
        high_discard_fraction: (discarded as f64) > DISCARD_WARN_FRACTION * cycles as f64,
    };
    Ok((complete, estimate))
}

fn one_cycle(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    binner: &StateBinner,
    replica: u64,
) -> Result<Option<RegenerationCycle>, SimError> {
    let start = SystemState::regeneration();
    let mut engine = Engine::new(cfg, arrival, service, start.clone(), replica)?;
    let mut occupation = BTreeMap::new();
    let mut prev_t = 0.0;
    let mut prev_state = start;
    loop {
        match engine.step()? {
            Some(ev) => {
                binner.accumulate(&mut occupation, &prev_state, ev.time - prev_t);
                if prev_state.is_idle() && matches!(ev.kind, EventKind::Arrival { .. }) {
                    return Ok(Some(RegenerationCycle {
                        duration: ev.time,
                        occupation,
                    }));
                }
                prev_t = ev.time;
                prev_state = ev.state_after;
            }
            None => return Ok(None),
        }
    }
}

/// Long-run occupancy fractions of a single trajectory started from a
/// regeneration, with the first `warmup` fraction of the horizon dropped.
pub fn occupation_pmf(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    binner: &StateBinner,
    warmup: f64,
) -> Result<TagPmf, SimError> {
    if !(0.0..1.0).contains(&warmup) {
        return Err(SimError::BadConfig("warmup fraction must lie in [0, 1)"));
    }
    let cut = warmup * cfg.horizon;
    let start = SystemState::regeneration();
    let mut engine = Engine::new(cfg, arrival, service, start.clone(), 0)?;
    let mut occupation = BTreeMap::new();
    let mut prev_t = 0.0;
    let mut prev_state = start;
    loop {
        match engine.step()? {
            Some(ev) => {
                credit(binner, &mut occupation, &prev_state, prev_t, ev.time, cut);
                prev_t = ev.time;
                prev_state = ev.state_after;
            }
            None => {
                let end = match engine.termination() {
                    Some(Termination::Horizon) => cfg.horizon,
                    _ => engine.time(),
                };
                credit(binner, &mut occupation, &prev_state, prev_t, end, cut);
                break;
            }
        }
    }
    TagPmf::from_occupation(&occupation)
        .map_err(|_| SimError::BadConfig("horizon leaves no time after warmup"))
}

/// Credits the part of the sojourn `[from, to)` past the warmup cut.
fn credit(
    binner: &StateBinner,
    acc: &mut BTreeMap<StateTag, f64>,
    state: &SystemState,
    from: f64,
    to: f64,
    cut: f64,
) {
    if to <= cut {
        return;
    }
    if from >= cut {
        binner.accumulate(acc, state, to - from);
    } else {
        let aged = state
            .advance(cut - from)
            .expect("cut is ahead of the anchor");
        binner.accumulate(acc, &aged, to - cut);
    }
}

/// Approximate stationary draws: one long trajectory from a regeneration,
/// observed at times uniform on `[0, T]` where `T` is the last observed
/// regeneration. Sampling at uniform times over whole cycles removes the
/// length bias a fixed-horizon cut would introduce.
pub fn stationary_draws(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    draws: usize,
) -> Result<Vec<SystemState>, SimError> {
    if draws == 0 {
        return Err(SimError::BadConfig("need at least one draw"));
    }
    let start = SystemState::regeneration();

    // pass 1: locate the last regeneration within the horizon
    let mut engine = Engine::new(cfg, arrival, service, start.clone(), 0)?;
    let mut prev_idle = false;
    let mut last_regen = None;
    while let Some(ev) = engine.step()? {
        if prev_idle && matches!(ev.kind, EventKind::Arrival { .. }) {
            last_regen = Some(ev.time);
        }
        prev_idle = ev.state_after.is_idle();
    }
    let t_star = last_regen.ok_or(SimError::NoCompleteCycles)?;

    // pass 2: identical replica, observed at sorted uniform times
    let mut scratch = stream(cfg.seed, 0, StreamRole::Scratch);
    let mut times: Vec<f64> = (0..draws).map(|_| scratch.gen::<f64>() * t_star).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));

    let mut engine = Engine::new(cfg, arrival, service, start.clone(), 0)?;
    let mut out = Vec::with_capacity(draws);
    let mut prev_t = 0.0;
    let mut prev_state = start;
    let mut idx = 0;
    while idx < times.len() {
        let ev = engine
            .step()?
            .expect("observation times precede the final regeneration");
        while idx < times.len() && times[idx] < ev.time {
            out.push(
                prev_state
                    .advance(times[idx] - prev_t)
                    .expect("sorted times"),
            );
            idx += 1;
        }
        while idx < times.len() && times[idx] == ev.time {
            out.push(ev.state_after.clone());
            idx += 1;
        }
        prev_t = ev.time;
        prev_state = ev.state_after;
    }
    Ok(out)
}
