use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{SimMode, SimulatorConfig};
use super::rng::{exp_variate, stream, StreamRole};
use super::{EventKind, EventRecord, Termination};
use crate::model::{ArrivalLaw, LawError, ServiceLaw, StateError, SystemState};

/// Declared envelopes may be attained exactly, and rates are re-evaluated
/// after aging arithmetic; allow this much relative overshoot before
/// declaring the envelope broken.
pub(crate) const ENVELOPE_SLACK: f64 = 1e-9;

/// Envelope validity window for hazard-thinning mode. Hazards may grow, so
/// the bound `hazard_sup(s, w)` only covers `w` time units ahead.
const THINNING_WINDOW: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("bad configuration: {0}")]
    BadConfig(&'static str),
    #[error("intensity {rate} exceeds its envelope {bound} at t = {time}")]
    EnvelopeViolation { time: f64, rate: f64, bound: f64 },
    #[error("idle intensity {rate} fell below the declared floor {floor} at t = {time}")]
    FloorViolation { time: f64, rate: f64, floor: f64 },
    #[error("event intensity envelope is unbounded at t = {time}")]
    UnboundedEnvelope { time: f64 },
    #[error("event cap hit at t = {time} before the run completed")]
    EventCapBeforeDone { time: f64 },
    #[error("no regeneration was observed within the horizon")]
    NoCompleteCycles,
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Single-trajectory event generator. Between events the state is the
/// anchor aged deterministically, so callers can reconstruct the whole
/// path from the event records alone, bit for bit.
pub struct Engine<'a> {
    arrival: &'a ArrivalLaw,
    service: &'a ServiceLaw,
    mode: SimMode,
    horizon: f64,
    max_events: usize,
    state: SystemState,
    time: f64,
    /// Absolute completion times, parallel to the elapsed coordinates
    /// (agenda mode only).
    agenda: Vec<f64>,
    arr_rng: ChaCha8Rng,
    svc_rng: ChaCha8Rng,
    events_applied: usize,
    termination: Option<Termination>,
}

impl<'a> Engine<'a> {
    pub fn new(
        cfg: &SimulatorConfig,
        arrival: &'a ArrivalLaw,
        service: &'a ServiceLaw,
        initial: SystemState,
        replica: u64,
    ) -> Result<Self, SimError> {
        let mut svc_rng = stream(cfg.seed, replica, StreamRole::Service);
        let mut agenda = Vec::new();
        if cfg.mode == SimMode::Agenda {
            agenda.reserve(initial.n());
            for &s in initial.elapsed() {
                let e = exp_variate(&mut svc_rng, 1.0);
                agenda.push(service.residual_service_sample(s, e)?);
            }
        }
        Ok(Self {
            arrival,
            service,
            mode: cfg.mode,
            horizon: cfg.horizon,
            max_events: cfg.max_events,
            state: initial,
            time: 0.0,
            agenda,
            arr_rng: stream(cfg.seed, replica, StreamRole::Arrival),
            svc_rng,
            events_applied: 0,
            termination: None,
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    /// Time of the last applied event (0 before the first).
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events_applied(&self) -> usize {
        self.events_applied
    }

    /// Set once `step` has returned `None`.
    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// Generates and applies the next event. Returns `None` once the
    /// horizon or the event cap is reached; `termination` says which.
    pub fn step(&mut self) -> Result<Option<EventRecord>, SimError> {
        if self.termination.is_some() {
            return Ok(None);
        }
        if self.events_applied >= self.max_events {
            self.termination = Some(Termination::EventCap);
            return Ok(None);
        }
        match self.mode {
            SimMode::Agenda => self.step_agenda(),
            SimMode::HazardThinning => self.step_thinning(),
        }
    }

    fn check_rate(&self, rate: f64, bound: f64, time: f64) -> Result<(), SimError> {
        if !(rate.is_finite() && rate >= 0.0) || rate > bound * (1.0 + ENVELOPE_SLACK) {
            return Err(SimError::EnvelopeViolation { time, rate, bound });
        }
        Ok(())
    }

    fn next_departure(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, &t) in self.agenda.iter().enumerate() {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
        best
    }

    fn step_agenda(&mut self) -> Result<Option<EventRecord>, SimError> {
        let dep = self.next_departure();
        let dep_time = dep.map_or(f64::INFINITY, |(t, _)| t);
        let limit = dep_time.min(self.horizon);

        // thin arrival candidates against the count-level envelope, which
        // stays valid until the count changes at the next event
        let bound = self.arrival.level_sup(self.state.n());
        let mut cursor = self.time;
        let arrival_time = loop {
            if bound <= 0.0 {
                break f64::INFINITY;
            }
            let c = cursor + exp_variate(&mut self.arr_rng, bound);
            cursor = c;
            if c > limit {
                // an event or the horizon intervenes; the candidate is
                // discarded and redrawn afresh afterwards (memorylessness)
                break f64::INFINITY;
            }
            let rate = self.arrival.rate_after(&self.state, c - self.time);
            self.check_rate(rate, bound, c)?;
            if self.arr_rng.gen::<f64>() * bound < rate {
                break c;
            }
        };

        if arrival_time.min(dep_time) > self.horizon {
            self.termination = Some(Termination::Horizon);
            return Ok(None);
        }
        if arrival_time <= dep_time {
            self.apply_arrival(arrival_time, true).map(Some)
        } else {
            let (t, idx) = dep.expect("departure earlier than a finite arrival");
            self.agenda.remove(idx);
            self.apply_departure(t, idx).map(Some)
        }
    }

    fn step_thinning(&mut self) -> Result<Option<EventRecord>, SimError> {
        let n = self.state.n();
        let b_arr = self.arrival.level_sup(n);
        let mut cursor = self.time;
        loop {
            let offset = cursor - self.time;
            // envelope for total event intensity over the next window
            let (b_svc, window) = if n == 0 {
                (0.0, f64::INFINITY)
            } else {
                let mut sum = 0.0;
                for &s in self.state.elapsed() {
                    let sup = self.service.hazard_sup(s + offset, THINNING_WINDOW);
                    if !sup.is_finite() {
                        return Err(SimError::UnboundedEnvelope { time: cursor });
                    }
                    sum += sup;
                }
                (sum, THINNING_WINDOW)
            };
            let total_bound = b_arr + b_svc;
            if total_bound <= 0.0 {
                self.termination = Some(Termination::Horizon);
                return Ok(None);
            }
            let delta = exp_variate(&mut self.arr_rng, total_bound);
            if delta > window {
                cursor += window;
                if cursor > self.horizon {
                    self.termination = Some(Termination::Horizon);
                    return Ok(None);
                }
                continue;
            }
            let c = cursor + delta;
            cursor = c;
            if c > self.horizon {
                self.termination = Some(Termination::Horizon);
                return Ok(None);
            }
            let dt = c - self.time;
            let lambda = self.arrival.rate_after(&self.state, dt);
            self.check_rate(lambda, b_arr, c)?;
            let mut total = lambda;
            let mut hazards = Vec::with_capacity(n);
            for &s in self.state.elapsed() {
                let h = self.service.hazard(s + dt);
                hazards.push(h);
                total += h;
            }
            self.check_rate(total, total_bound, c)?;
            let u = self.arr_rng.gen::<f64>() * total_bound;
            if u < lambda {
                return self.apply_arrival(c, false).map(Some);
            }
            let mut acc = lambda;
            for (i, h) in hazards.iter().enumerate() {
                acc += h;
                if u < acc {
                    return self.apply_departure(c, i).map(Some);
                }
            }
            // u landed in the rejection band; try again from c
        }
    }

    fn apply_arrival(&mut self, at: f64, with_agenda: bool) -> Result<EventRecord, SimError> {
        let n = self.state.n();
        let slot = if n == 0 {
            1
        } else {
            self.arr_rng.gen_range(1..=n + 1)
        };
        self.state = self.state.advance(at - self.time)?.apply_arrival(slot)?;
        if with_agenda {
            let e = exp_variate(&mut self.svc_rng, 1.0);
            let total = self.service.residual_service_sample(0.0, e)?;
            self.agenda.insert(slot - 1, at + total);
        }
        self.time = at;
        self.events_applied += 1;
        Ok(EventRecord {
            time: at,
            kind: EventKind::Arrival { slot },
            state_after: self.state.clone(),
        })
    }

    fn apply_departure(&mut self, at: f64, index: usize) -> Result<EventRecord, SimError> {
        self.state = self
            .state
            .advance(at - self.time)?
            .apply_departure(index + 1)?;
        self.time = at;
        self.events_applied += 1;
        Ok(EventRecord {
            time: at,
            kind: EventKind::Departure { index: index + 1 },
            state_after: self.state.clone(),
        })
    }
}
