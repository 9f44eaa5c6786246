use std::fmt::Write as _;

use esq_core::analysis::{tail_exponent_fit, tail_shape};
use esq_core::coupling::{coupled_ensemble, coupling_survival};
use esq_core::SimulatorConfig;

use super::{flag, num};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let cp = cfg.coupling_block()?;
    let x0 = cp.x_initial.build("coupling.x_initial")?;
    let y0 = cp.y_initial.build("coupling.y_initial")?;

    let sim_cfg = SimulatorConfig::new(cfg.sim.seed, cp.horizon, cfg.sim_mode())?
        .with_snapshots(cp.snapshot_times.clone())?
        .with_max_events(cfg.sim.max_events)?;
    let outcomes = coupled_ensemble(&sim_cfg, &arrival, &service, &x0, &y0, cp.replicas)?;

    let mut table = String::from(
        "run,coupling_time,coupling_censored,both_idle_time,both_idle_censored,attempts\n",
    );
    let mut merged = 0usize;
    for (r, o) in outcomes.iter().enumerate() {
        writeln!(
            table,
            "{r},{},{},{},{},{}",
            num(o.coupling_time.value),
            flag(o.coupling_time.censored),
            num(o.both_idle_time.value),
            flag(o.both_idle_time.censored),
            o.attempts
        )
        .unwrap();
        merged += (!o.coupling_time.censored) as usize;
    }

    let curve = coupling_survival(&outcomes)?;
    let mut survival_csv = String::from("time,survival,stderr\n");
    for ((&t, &s), &se) in curve
        .times()
        .iter()
        .zip(curve.survival())
        .zip(curve.stderr())
    {
        writeln!(survival_csv, "{},{},{}", num(t), num(s), num(se)).unwrap();
    }

    // the tail fit is diagnostic: too few uncensored pairs is a finding,
    // not a crash
    let mut tail_txt = String::new();
    match tail_exponent_fit(&curve, None) {
        Ok(fit) => {
            writeln!(
                tail_txt,
                "log-survival slope vs log(1 + t)  {}",
                num(fit.exponent)
            )
            .unwrap();
            writeln!(
                tail_txt,
                "r_squared                         {}",
                num(fit.r_squared)
            )
            .unwrap();
            writeln!(
                tail_txt,
                "fit window                        [{}, {}] on {} points",
                num(fit.window.0),
                num(fit.window.1),
                fit.points
            )
            .unwrap();
            if let Ok(shape) = tail_shape(&curve, None) {
                writeln!(
                    tail_txt,
                    "power-law r2 {} vs exponential r2 {} -> looks_exponential = {}",
                    num(shape.power_r_squared),
                    num(shape.exponential_r_squared),
                    flag(shape.looks_exponential)
                )
                .unwrap();
            }
        }
        Err(e) => writeln!(tail_txt, "no tail fit: {e}").unwrap(),
    }

    let mut run = RunContext::create(cfg, "couple")?;
    run.write_file("coupling.csv", &table)?;
    run.write_file("survival.csv", &survival_csv)?;
    run.write_file("tail.txt", &tail_txt)?;
    run.finish()?;

    Ok(format!(
        "{} pairs, {} merged by t = {} ({:.4}); outputs in {}",
        cp.replicas,
        merged,
        num(cp.horizon),
        merged as f64 / cp.replicas as f64,
        cfg.output.dir
    ))
}
