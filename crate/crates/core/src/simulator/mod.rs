//! Exact event-driven simulation. Two drivers generate statistically
//! identical trajectories: the agenda driver presamples each service
//! completion by inverting the cumulative hazard, while the thinning driver
//! lets arrivals and departures compete through one bounded event clock.
//! All randomness flows through keyed streams, so every trajectory is a
//! pure function of `(seed, replica)`.

mod config;
pub(crate) mod engine;
pub mod regen;
pub mod rng;

pub use config::{SimMode, SimulatorConfig, DEFAULT_MAX_EVENTS};
pub use engine::{Engine, SimError};

use rayon::prelude::*;

use crate::analysis::survival::CensoredSample;
use crate::model::{ArrivalLaw, ServiceLaw, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// A customer entered service at `slot` (1-based position).
    Arrival { slot: usize },
    /// The customer at `index` (1-based) completed service.
    Departure { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub state_after: SystemState,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    EventCap,
}

/// A complete run: the initial state plus every applied event. The state
/// between events is the previous state aged deterministically, so the
/// record reconstructs the full path exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: SystemState,
    pub events: Vec<EventRecord>,
    pub termination: Termination,
    pub horizon: f64,
}

impl Trajectory {
    /// State at time `t`, right-continuous at event times.
    pub fn state_at(&self, t: f64) -> SystemState {
        assert!(t >= 0.0 && (t <= self.horizon || self.termination == Termination::Horizon));
        let i = self.events.partition_point(|ev| ev.time <= t);
        let (base_t, base) = if i == 0 {
            (0.0, &self.initial)
        } else {
            (self.events[i - 1].time, &self.events[i - 1].state_after)
        };
        base.advance(t - base_t).expect("t is ahead of the anchor")
    }

    pub fn final_state(&self) -> &SystemState {
        self.events
            .last()
            .map_or(&self.initial, |ev| &ev.state_after)
    }
}

/// Runs replica 0. See [`simulate_replica`].
pub fn simulate(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
) -> Result<Trajectory, SimError> {
    simulate_replica(cfg, arrival, service, initial, 0)
}

/// Runs one replica to the horizon (or the event cap) and materializes
/// every event.
pub fn simulate_replica(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replica: u64,
) -> Result<Trajectory, SimError> {
    let mut engine = Engine::new(cfg, arrival, service, initial.clone(), replica)?;
    let mut events = Vec::new();
    while let Some(ev) = engine.step()? {
        events.push(ev);
    }
    Ok(Trajectory {
        initial: initial.clone(),
        events,
        termination: engine.termination().expect("step returned None"),
        horizon: cfg.horizon,
    })
}

/// States of one replica at the configured snapshot times, streamed
/// without materializing the trajectory. Snapshots are right-continuous:
/// an observation exactly at an event time sees the post-event state.
fn snapshots_replica(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replica: u64,
) -> Result<Vec<SystemState>, SimError> {
    let times = &cfg.snapshot_times;
    let mut engine = Engine::new(cfg, arrival, service, initial.clone(), replica)?;
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut prev_state = initial.clone();
    let mut idx = 0;
    while idx < times.len() {
        match engine.step()? {
            Some(ev) => {
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
            None => match engine.termination() {
                Some(Termination::Horizon) => {
                    while idx < times.len() {
                        out.push(
                            prev_state
                                .advance(times[idx] - prev_t)
                                .expect("sorted times"),
                        );
                        idx += 1;
                    }
                }
                _ => {
                    return Err(SimError::EventCapBeforeDone {
                        time: engine.time(),
                    })
                }
            },
        }
    }
    Ok(out)
}

/// Snapshot states for many replicas: `result[replica][snapshot index]`.
pub fn ensemble_snapshots(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replicas: usize,
) -> Result<Vec<Vec<SystemState>>, SimError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| snapshots_replica(cfg, arrival, service, initial, r))
        .collect()
}

/// First-passage observations per replica: `empty` is the first time the
/// system has no customers; `regen` is the first arrival into an empty
/// system. Runs that end first are censored at their end time.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimes {
    pub empty: Vec<CensoredSample>,
    pub regen: Vec<CensoredSample>,
}

pub fn hitting_times(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replicas: usize,
) -> Result<HittingTimes, SimError> {
    let per_replica: Vec<(CensoredSample, CensoredSample)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| hitting_replica(cfg, arrival, service, initial, r))
        .collect::<Result<_, _>>()?;
    Ok(HittingTimes {
        empty: per_replica.iter().map(|p| p.0).collect(),
        regen: per_replica.iter().map(|p| p.1).collect(),
    })
}

fn hitting_replica(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    initial: &SystemState,
    replica: u64,
) -> Result<(CensoredSample, CensoredSample), SimError> {
    let mut engine = Engine::new(cfg, arrival, service, initial.clone(), replica)?;
    let mut empty = if initial.is_idle() {
        Some(CensoredSample::observed(0.0))
    } else {
        None
    };
    let mut regen = None;
    let mut prev_idle = initial.is_idle();
    while regen.is_none() {
        match engine.step()? {
            Some(ev) => {
                if empty.is_none() && ev.state_after.is_idle() {
                    empty = Some(CensoredSample::observed(ev.time));
                }
                if prev_idle && matches!(ev.kind, EventKind::Arrival { .. }) {
                    regen = Some(CensoredSample::observed(ev.time));
                }
                prev_idle = ev.state_after.is_idle();
            }
            None => {
                let end = match engine.termination() {
                    Some(Termination::Horizon) => cfg.horizon,
                    _ => engine.time(),
                };
                return Ok((
                    empty.unwrap_or(CensoredSample::censored_at(end)),
                    regen.unwrap_or(CensoredSample::censored_at(end)),
                ));
            }
        }
    }
    Ok((
        empty.expect("an empty period precedes regeneration"),
        regen.expect("loop exits only once set"),
    ))
}
