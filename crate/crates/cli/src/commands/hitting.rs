use std::fmt::Write as _;

use esq_core::analysis::moment_estimate;
use esq_core::simulator::hitting_times;

use super::{flag, num};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let sim_cfg = cfg.simulator_config()?;
    let initial = cfg.initial_state()?;

    let ht = hitting_times(&sim_cfg, &arrival, &service, &initial, cfg.sim.replicas)?;

    let mut samples = String::from("replica,tau_empty,empty_censored,tau_regen,regen_censored\n");
    for (r, (e, g)) in ht.empty.iter().zip(&ht.regen).enumerate() {
        writeln!(
            samples,
            "{r},{},{},{},{}",
            num(e.value),
            flag(e.censored),
            num(g.value),
            flag(g.censored)
        )
        .unwrap();
    }

    // censored values enter the moments at their censoring time, so a
    // nontrivial censored fraction biases them low; the flag says so
    let mut moments = String::from("quantity,power,value,stderr,censored_fraction,unreliable\n");
    let mut first_regen_mean = None;
    for &p in &cfg.hitting.powers {
        for (name, data) in [
            ("time_to_empty", &ht.empty),
            ("time_to_regeneration", &ht.regen),
        ] {
            let est = moment_estimate(data, p)?;
            if name == "time_to_regeneration" && first_regen_mean.is_none() && p == 1.0 {
                first_regen_mean = Some(est);
            }
            writeln!(
                moments,
                "{name},{},{},{},{},{}",
                num(p),
                num(est.value),
                num(est.stderr),
                num(est.censored_fraction),
                flag(est.unreliable)
            )
            .unwrap();
        }
    }

    let mut run = RunContext::create(cfg, "hitting")?;
    run.write_file("hitting.csv", &samples)?;
    run.write_file("moments.csv", &moments)?;
    run.finish()?;

    Ok(format!(
        "{} replicas{}; outputs in {}",
        cfg.sim.replicas,
        first_regen_mean
            .map(|e| format!(
                ", mean regeneration time {:.4} +- {:.4}{}",
                e.value,
                e.stderr,
                if e.unreliable {
                    " (censoring-biased)"
                } else {
                    ""
                }
            ))
            .unwrap_or_default(),
        cfg.output.dir
    ))
}
