//! Synchronous coupling of two copies of the process from different
//! initial states. Both copies draw from a shared arrival stream of rate
//! `lambda0_min` — the guaranteed idle intensity — which fires real
//! arrivals into whichever copy is idle; everything above that floor comes
//! from per-copy remainder streams, and services are per-copy. Each copy
//! therefore follows the exact marginal law, and a shared arrival that
//! finds both copies idle makes their states literally equal, after which
//! they are run as one. The fraction of pairs still distinct at time `t`
//! bounds the total variation distance between the two time-`t` laws.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::survival::{kaplan_meier, CensoredSample, SurvivalCurve};
use crate::analysis::AnalysisError;
use crate::model::{ArrivalLaw, ServiceLaw, SystemState};
use crate::simulator::engine::ENVELOPE_SLACK;
use crate::simulator::rng::{exp_variate, stream, StreamRole};
use crate::simulator::{SimError, SimulatorConfig};

/// What one coupled run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOutcome {
    /// When the two copies became identical; censored at the horizon.
    pub coupling_time: CensoredSample,
    /// First time both copies were simultaneously empty.
    pub both_idle_time: CensoredSample,
    /// Shared-stream arrivals that fired before the merge without finding
    /// both copies idle.
    pub attempts: u32,
    /// The common state right after the merging arrival.
    pub merge_state: Option<SystemState>,
    /// Per-copy states at the configured snapshot times (the second copy
    /// mirrors the first after the merge).
    pub x_snapshots: Vec<SystemState>,
    pub y_snapshots: Vec<SystemState>,
    pub x_final: SystemState,
    pub y_final: SystemState,
}

struct CopyProc {
    state: SystemState,
    /// Absolute completion times, parallel to the elapsed coordinates.
    agenda: Vec<f64>,
    rem_rng: ChaCha8Rng,
    svc_rng: ChaCha8Rng,
}

impl CopyProc {
    fn init(
        initial: &SystemState,
        service: &ServiceLaw,
        mut svc_rng: ChaCha8Rng,
        rem_rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        let mut agenda = Vec::with_capacity(initial.n());
        for &s in initial.elapsed() {
            let e = exp_variate(&mut svc_rng, 1.0);
            agenda.push(service.residual_service_sample(s, e)?);
        }
        Ok(Self {
            state: initial.clone(),
            agenda,
            rem_rng,
            svc_rng,
        })
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

    /// Applies an arrival at absolute time `at` to the already-advanced
    /// state, presampling its completion.
    fn arrive(&mut self, at: f64, service: &ServiceLaw, slot: usize) -> Result<(), SimError> {
        self.state = self.state.apply_arrival(slot)?;
        let e = exp_variate(&mut self.svc_rng, 1.0);
        let total = service.residual_service_sample(0.0, e)?;
        self.agenda.insert(slot - 1, at + total);
        Ok(())
    }

    fn draw_slot(&mut self) -> usize {
        let n = self.state.n();
        if n == 0 {
            1
        } else {
            self.rem_rng.gen_range(1..=n + 1)
        }
    }
}

/// Next accepted remainder arrival for one copy, no later than `limit`.
/// While the copy is idle the remainder carries the intensity above the
/// shared floor; while busy it carries the whole intensity. The envelope
/// stays valid until the copy's count changes, and every candidate past
/// `limit` is discarded because some other event gets applied first.
fn next_remainder(
    copy: &mut CopyProc,
    arrival: &ArrivalLaw,
    lambda0_min: f64,
    t: f64,
    limit: f64,
) -> Result<Option<f64>, SimError> {
    let idle = copy.state.is_idle();
    let bound = if idle {
        arrival.lambda0_max() - lambda0_min
    } else {
        arrival.level_sup(copy.state.n())
    };
    if bound <= 0.0 {
        return Ok(None);
    }
    let mut cursor = t;
    loop {
        let c = cursor + exp_variate(&mut copy.rem_rng, bound);
        cursor = c;
        if c > limit {
            return Ok(None);
        }
        let full_rate = arrival.rate_after(&copy.state, c - t);
        let target = if idle {
            full_rate - lambda0_min
        } else {
            full_rate
        };
        if target < -ENVELOPE_SLACK * (1.0 + lambda0_min) {
            return Err(SimError::FloorViolation {
                time: c,
                rate: full_rate,
                floor: lambda0_min,
            });
        }
        if !(target.is_finite()) || target > bound * (1.0 + ENVELOPE_SLACK) {
            return Err(SimError::EnvelopeViolation {
                time: c,
                rate: target,
                bound,
            });
        }
        if copy.rem_rng.gen::<f64>() * bound < target {
            return Ok(Some(c));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pick {
    DepX(usize),
    DepY(usize),
    Common,
    RemX,
    RemY,
}

/// Runs one coupled pair from `(x0, y0)` to the horizon.
pub fn simulate_coupled(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    x0: &SystemState,
    y0: &SystemState,
    replica: u64,
) -> Result<CouplingOutcome, SimError> {
    let l0_min = arrival.lambda0_min();
    let horizon = cfg.horizon;
    let mut common_rng = stream(cfg.seed, replica, StreamRole::Common);
    let mut x = CopyProc::init(
        x0,
        service,
        stream(cfg.seed, replica, StreamRole::ServiceX),
        stream(cfg.seed, replica, StreamRole::RemainderX),
    )?;
    let mut y = CopyProc::init(
        y0,
        service,
        stream(cfg.seed, replica, StreamRole::ServiceY),
        stream(cfg.seed, replica, StreamRole::RemainderY),
    )?;

    let mut t = 0.0;
    let mut events = 0usize;
    let mut attempts = 0u32;
    let mut merged_at = None;
    let mut merge_state = None;
    if x0 == y0 {
        merged_at = Some(0.0);
        merge_state = Some(x0.clone());
    }
    let mut both_idle_at = if x0.is_idle() && y0.is_idle() {
        Some(0.0)
    } else {
        None
    };
    let snaps = &cfg.snapshot_times;
    let mut snap_idx = 0;
    let mut x_snapshots = Vec::with_capacity(snaps.len());
    let mut y_snapshots = Vec::with_capacity(snaps.len());

    loop {
        if events >= cfg.max_events {
            return Err(SimError::EventCapBeforeDone { time: t });
        }
        let merged = merged_at.is_some();

        let dep_x = x.next_departure();
        let dep_y = if merged { None } else { y.next_departure() };
        let c_common = t + exp_variate(&mut common_rng, l0_min);

        let mut limit = horizon;
        for cand in [dep_x.map(|d| d.0), dep_y.map(|d| d.0), Some(c_common)]
            .into_iter()
            .flatten()
        {
            limit = limit.min(cand);
        }
        let rem_x = next_remainder(&mut x, arrival, l0_min, t, limit)?;
        if let Some(c) = rem_x {
            limit = limit.min(c);
        }
        let rem_y = if merged {
            None
        } else {
            next_remainder(&mut y, arrival, l0_min, t, limit)?
        };

        // earliest candidate wins; the listing order breaks exact ties
        let mut best: Option<(f64, Pick)> = None;
        let candidates = [
            (dep_x.map(|d| d.0), dep_x.map(|d| Pick::DepX(d.1))),
            (dep_y.map(|d| d.0), dep_y.map(|d| Pick::DepY(d.1))),
            (Some(c_common), Some(Pick::Common)),
            (rem_x, Some(Pick::RemX)),
            (rem_y, Some(Pick::RemY)),
        ];
        for (time, pick) in candidates {
            if let (Some(ct), Some(p)) = (time, pick) {
                if best.is_none_or(|(bt, _)| ct < bt) {
                    best = Some((ct, p));
                }
            }
        }

        let (c, pick) = match best {
            Some((ct, p)) if ct <= horizon => (ct, p),
            _ => break,
        };

        // observations strictly before the event see the aged pre-states
        while snap_idx < snaps.len() && snaps[snap_idx] < c {
            let tau = snaps[snap_idx];
            let xs = x.state.advance(tau - t)?;
            let ys = if merged {
                xs.clone()
            } else {
                y.state.advance(tau - t)?
            };
            x_snapshots.push(xs);
            y_snapshots.push(ys);
            snap_idx += 1;
        }

        let x_was_idle = x.state.is_idle();
        let y_was_idle = y.state.is_idle();
        x.state = x.state.advance(c - t)?;
        if !merged {
            y.state = y.state.advance(c - t)?;
        }

        match pick {
            Pick::DepX(i) => {
                x.state = x.state.apply_departure(i + 1)?;
                x.agenda.remove(i);
            }
            Pick::DepY(i) => {
                y.state = y.state.apply_departure(i + 1)?;
                y.agenda.remove(i);
            }
            Pick::Common => {
                if merged {
                    if x_was_idle {
                        x.arrive(c, service, 1)?;
                    }
                } else {
                    match (x_was_idle, y_was_idle) {
                        (true, true) => {
                            x.arrive(c, service, 1)?;
                            y.state = x.state.clone();
                            merged_at = Some(c);
                            merge_state = Some(x.state.clone());
                        }
                        (true, false) => {
                            x.arrive(c, service, 1)?;
                            attempts += 1;
                        }
                        (false, true) => {
                            y.arrive(c, service, 1)?;
                            attempts += 1;
                        }
                        (false, false) => {
                            attempts += 1;
                        }
                    }
                }
            }
            Pick::RemX => {
                let slot = x.draw_slot();
                x.arrive(c, service, slot)?;
            }
            Pick::RemY => {
                let slot = y.draw_slot();
                y.arrive(c, service, slot)?;
            }
        }

        let now_merged = merged_at.is_some();
        if both_idle_at.is_none() && x.state.is_idle() && (now_merged || y.state.is_idle()) {
            both_idle_at = Some(c);
        }

        // observations exactly at the event see the post-event states
        while snap_idx < snaps.len() && snaps[snap_idx] == c {
            x_snapshots.push(x.state.clone());
            y_snapshots.push(if now_merged {
                x.state.clone()
            } else {
                y.state.clone()
            });
            snap_idx += 1;
        }

        t = c;
        events += 1;
    }

    // drain observations up to the horizon
    let merged = merged_at.is_some();
    while snap_idx < snaps.len() {
        let tau = snaps[snap_idx];
        let xs = x.state.advance(tau - t)?;
        let ys = if merged {
            xs.clone()
        } else {
            y.state.advance(tau - t)?
        };
        x_snapshots.push(xs);
        y_snapshots.push(ys);
        snap_idx += 1;
    }
    let x_final = x.state.advance(horizon - t)?;
    let y_final = if merged {
        x_final.clone()
    } else {
        y.state.advance(horizon - t)?
    };

    Ok(CouplingOutcome {
        coupling_time: match merged_at {
            Some(tc) => CensoredSample::observed(tc),
            None => CensoredSample::censored_at(horizon),
        },
        both_idle_time: match both_idle_at {
            Some(tb) => CensoredSample::observed(tb),
            None => CensoredSample::censored_at(horizon),
        },
        attempts,
        merge_state,
        x_snapshots,
        y_snapshots,
        x_final,
        y_final,
    })
}

/// Independent coupled pairs, one per replica.
pub fn coupled_ensemble(
    cfg: &SimulatorConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    x0: &SystemState,
    y0: &SystemState,
    replicas: usize,
) -> Result<Vec<CouplingOutcome>, SimError> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_coupled(cfg, arrival, service, x0, y0, r))
        .collect()
}

/// Kaplan-Meier curve of the coupling time over an ensemble.
pub fn coupling_survival(outcomes: &[CouplingOutcome]) -> Result<SurvivalCurve, AnalysisError> {
    let samples: Vec<CensoredSample> = outcomes.iter().map(|o| o.coupling_time).collect();
    kaplan_meier(&samples)
}

/// Empirical bound on the total variation distance between the two copies'
/// laws at time `t`: the fraction of pairs not yet merged by `t`.
pub fn tv_upper_bound_from_coupling(outcomes: &[CouplingOutcome], t: f64) -> f64 {
    let exceed = outcomes
        .iter()
        .filter(|o| {
            let s = o.coupling_time;
            if s.censored {
                s.value >= t
            } else {
                s.value > t
            }
        })
        .count();
    exceed as f64 / outcomes.len() as f64
}
