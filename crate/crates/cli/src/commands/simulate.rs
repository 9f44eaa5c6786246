use rayon::prelude::*;

use esq_core::simulator::{simulate_replica, SimError, Termination, Trajectory};

use super::{state_row, STATE_HEADER};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let sim_cfg = cfg.simulator_config()?;
    let initial = cfg.initial_state()?;

    let trajectories: Vec<Trajectory> = (0..cfg.sim.replicas as u64)
        .into_par_iter()
        .map(|r| simulate_replica(&sim_cfg, &arrival, &service, &initial, r))
        .collect::<Result<_, _>>()?;

    let mut events_csv = String::from(STATE_HEADER);
    let mut total_events = 0usize;
    let mut capped = 0usize;
    for (r, traj) in trajectories.iter().enumerate() {
        state_row(&mut events_csv, r, 0.0, &traj.initial);
        for ev in &traj.events {
            state_row(&mut events_csv, r, ev.time, &ev.state_after);
        }
        total_events += traj.events.len();
        capped += (traj.termination == Termination::EventCap) as usize;
    }

    let snapshots_csv = if cfg.sim.snapshot_times.is_empty() {
        None
    } else {
        let mut csv = String::from(STATE_HEADER);
        for (r, traj) in trajectories.iter().enumerate() {
            for &t in &cfg.sim.snapshot_times {
                // a capped run carries no information past its last event
                if traj.termination == Termination::EventCap
                    && traj.events.last().is_none_or(|ev| ev.time < t)
                {
                    return Err(AppError::Sim(SimError::EventCapBeforeDone {
                        time: traj.events.last().map_or(0.0, |ev| ev.time),
                    }));
                }
                state_row(&mut csv, r, t, &traj.state_at(t));
            }
        }
        Some(csv)
    };

    let mut run = RunContext::create(cfg, "simulate")?;
    run.write_file("trajectory.csv", &events_csv)?;
    if let Some(csv) = &snapshots_csv {
        run.write_file("snapshots.csv", csv)?;
    }
    run.finish()?;

    Ok(format!(
        "{} replicas, {} events{}{}; outputs in {}",
        cfg.sim.replicas,
        total_events,
        if capped > 0 {
            format!(" ({capped} replicas hit the event cap)")
        } else {
            String::new()
        },
        if snapshots_csv.is_some() {
            format!(", snapshots at {} times", cfg.sim.snapshot_times.len())
        } else {
            String::new()
        },
        cfg.output.dir
    ))
}
