use std::collections::BTreeSet;
use std::fmt::Write as _;

use esq_core::analysis::{empirical_pmf, tail_exponent_fit, tv_distance_tags, StateTag};
use esq_core::coupling::{coupled_ensemble, coupling_survival, tv_upper_bound_from_coupling};
use esq_core::simulator::ensemble_snapshots;
use esq_core::{SimulatorConfig, SystemState};

use super::{flag, num};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let cp = cfg.coupling_block()?;
    let binner = cfg.binner()?;
    let times = &cfg.convergence.times;
    let x0 = cp.x_initial.build("coupling.x_initial")?;
    let y0 = cp.y_initial.build("coupling.y_initial")?;
    let mode = cfg.sim_mode();

    // the coupled pairs run at the base seed; the two plain ensembles run
    // at seed+1 and seed+2 so all three estimates are independent and the
    // standard errors below add up honestly
    let couple_cfg = SimulatorConfig::new(cfg.sim.seed, cp.horizon, mode)?
        .with_max_events(cfg.sim.max_events)?;
    let outcomes = coupled_ensemble(&couple_cfg, &arrival, &service, &x0, &y0, cp.replicas)?;
    let n_up = cp.replicas as f64;

    let plain = |offset: u64, initial: &SystemState| -> Result<Vec<Vec<SystemState>>, AppError> {
        let c = SimulatorConfig::new(cfg.sim.seed.wrapping_add(offset), cp.horizon, mode)?
            .with_snapshots(times.clone())?
            .with_max_events(cfg.sim.max_events)?;
        Ok(ensemble_snapshots(
            &c,
            &arrival,
            &service,
            initial,
            cfg.convergence.replicas,
        )?)
    };
    let xs = plain(1, &x0)?;
    let ys = plain(2, &y0)?;
    let n_low = cfg.convergence.replicas as f64;

    let mut csv = String::from("t,tv_lower,lower_se,tv_upper,upper_se,bracket_ok\n");
    let mut all_ok = true;
    for (i, &t) in times.iter().enumerate() {
        let at = |e: &[Vec<SystemState>]| -> Vec<SystemState> {
            e.iter().map(|row| row[i].clone()).collect()
        };
        let px = empirical_pmf(&at(&xs), &binner)?;
        let py = empirical_pmf(&at(&ys), &binner)?;
        let tv_lower = tv_distance_tags(&px, &py);
        let cells: BTreeSet<StateTag> = px
            .iter()
            .map(|(t, _)| t)
            .chain(py.iter().map(|(t, _)| t))
            .collect();
        let var: f64 = cells
            .iter()
            .map(|&c| {
                let (p, q) = (px.get(c), py.get(c));
                (p * (1.0 - p) + q * (1.0 - q)) / n_low
            })
            .sum();
        let lower_se = 0.5 * var.sqrt();

        let tv_upper = tv_upper_bound_from_coupling(&outcomes, t);
        let upper_se = (tv_upper * (1.0 - tv_upper) / n_up).sqrt();

        let ok = tv_lower <= tv_upper + 2.0 * (lower_se + upper_se);
        all_ok &= ok;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(t),
            num(tv_lower),
            num(lower_se),
            num(tv_upper),
            num(upper_se),
            flag(ok)
        )
        .unwrap();
    }

    let curve = coupling_survival(&outcomes)?;
    let merged = outcomes
        .iter()
        .filter(|o| !o.coupling_time.censored)
        .count();
    let mut summary = String::new();
    writeln!(
        summary,
        "coupled pairs        {} at seed {}",
        cp.replicas, cfg.sim.seed
    )
    .unwrap();
    writeln!(
        summary,
        "plain ensembles      {} replicas each at seeds {} (x) and {} (y)",
        cfg.convergence.replicas,
        cfg.sim.seed.wrapping_add(1),
        cfg.sim.seed.wrapping_add(2)
    )
    .unwrap();
    writeln!(
        summary,
        "merged by horizon    {merged} of {} ({:.4})",
        cp.replicas,
        merged as f64 / n_up
    )
    .unwrap();
    match tail_exponent_fit(&curve, None) {
        Ok(fit) => writeln!(
            summary,
            "survival tail slope  {} over [{}, {}] (r2 {}, {} points)",
            num(fit.exponent),
            num(fit.window.0),
            num(fit.window.1),
            num(fit.r_squared),
            fit.points
        )
        .unwrap(),
        Err(e) => writeln!(summary, "survival tail slope  not fitted: {e}").unwrap(),
    }
    writeln!(
        summary,
        "bracket              lower <= upper + 2(se_lower + se_upper) at every time: {}",
        if all_ok { "yes" } else { "NO" }
    )
    .unwrap();
    writeln!(summary, "distances are half-L1 total variation in [0, 1]").unwrap();

    let mut run = RunContext::create(cfg, "convergence")?;
    run.write_file("convergence.csv", &csv)?;
    run.write_file("summary.txt", &summary)?;
    run.finish()?;

    if all_ok {
        Ok(format!(
            "bracket holds at all {} times, {merged}/{} pairs merged; outputs in {}",
            times.len(),
            cp.replicas,
            cfg.output.dir
        ))
    } else {
        Err(AppError::Audit(format!(
            "binned distance exceeds the coupling bound; see {}/convergence.csv\n{summary}",
            cfg.output.dir
        )))
    }
}
