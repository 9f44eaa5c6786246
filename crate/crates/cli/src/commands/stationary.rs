use std::fmt::Write as _;

use esq_core::analysis::{
    birth_death_stationary, l1_distance, tv_distance, tv_distance_tags, DiscretePmf, StateTag,
};
use esq_core::simulator::regen::{occupation_pmf, regenerative_cycles};
use esq_core::{ArrivalLaw, ServiceLaw};

use super::{flag, num};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

/// Exact count law where one exists: any service with a constant arrival
/// rate (the count marginal is insensitive to the service shape), or
/// exponential service with a count-dependent rate (a birth-death chain).
fn closed_form_counts(
    cfg: &ExperimentConfig,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
) -> Result<Option<DiscretePmf>, AppError> {
    if cfg.model.arrival.kind == "constant" {
        let lambda = cfg.model.arrival.rate.unwrap();
        let mean = service.mean();
        return Ok(Some(birth_death_stationary(
            |_| lambda,
            |n| n as f64 / mean,
        )?));
    }
    if cfg.model.service.kind == "exponential" && arrival.count_rate(0).is_some() {
        let mu = cfg.model.service.mu.unwrap();
        return Ok(Some(birth_death_stationary(
            |n| arrival.count_rate(n).unwrap(),
            |n| n as f64 * mu,
        )?));
    }
    Ok(None)
}

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let binner = cfg.binner()?;
    let sim_cfg = cfg.simulator_config()?;

    let (_, estimate) =
        regenerative_cycles(&sim_cfg, &arrival, &service, &binner, cfg.stationary.cycles)?;
    let longrun = occupation_pmf(&sim_cfg, &arrival, &service, &binner, cfg.stationary.warmup)?;

    let regen_counts = estimate.pmf.to_count_pmf();
    let long_counts = longrun.to_count_pmf();
    let closed = closed_form_counts(cfg, &arrival, &service)?;

    // per-count table; the stderr column is only meaningful when the cells
    // themselves are counts
    let count_stderr = cfg.binner.scheme == "by_count";
    let rows = regen_counts
        .len()
        .max(long_counts.len())
        .max(closed.as_ref().map_or(0, |p| p.len()));
    let mut table = String::from("n,regenerative,stderr,longrun,closed_form\n");
    for n in 0..rows {
        let se = if count_stderr {
            estimate
                .stderr
                .get(&StateTag::Count(n as u32))
                .map(|&s| num(s))
                .unwrap_or_default()
        } else {
            String::new()
        };
        writeln!(
            table,
            "{n},{},{se},{},{}",
            num(regen_counts.get(n)),
            num(long_counts.get(n)),
            closed.as_ref().map(|p| num(p.get(n))).unwrap_or_default()
        )
        .unwrap();
    }

    // tv is the half-L1 convention in [0, 1]; l1 = 2 * tv is also reported
    // because convergence-rate statements are often quoted unhalved
    let mut tv_csv = String::from("comparison,tv,l1\n");
    let mut tv_row = |name: &str, tv: f64| {
        writeln!(tv_csv, "{name},{},{}", num(tv), num(2.0 * tv)).unwrap();
    };
    let tv_cells = tv_distance_tags(&estimate.pmf, &longrun);
    tv_row("regenerative_vs_longrun_cells", tv_cells);
    let tv_counts = tv_distance(&regen_counts, &long_counts);
    tv_row("regenerative_vs_longrun_counts", tv_counts);
    let mut tv_closed = None;
    if let Some(p) = &closed {
        let tv = tv_distance(&regen_counts, p);
        tv_row("regenerative_vs_closed_form", tv);
        tv_row("longrun_vs_closed_form", tv_distance(&long_counts, p));
        tv_closed = Some(tv);
        debug_assert_eq!(l1_distance(&regen_counts, p), 2.0 * tv);
    }

    let mut cycles_txt = String::new();
    writeln!(cycles_txt, "cycles_used          {}", estimate.cycles_used).unwrap();
    writeln!(cycles_txt, "discarded            {}", estimate.discarded).unwrap();
    writeln!(
        cycles_txt,
        "high_discard_fraction {}",
        flag(estimate.high_discard_fraction)
    )
    .unwrap();
    writeln!(
        cycles_txt,
        "mean_cycle           {}",
        num(estimate.mean_cycle)
    )
    .unwrap();

    let mut run = RunContext::create(cfg, "stationary")?;
    run.write_file("stationary.csv", &table)?;
    run.write_file("tv.csv", &tv_csv)?;
    run.write_file("cycles.txt", &cycles_txt)?;
    run.finish()?;

    Ok(format!(
        "{} cycles (mean length {:.4}), TV(regenerative, long-run) = {:.4}{}; outputs in {}",
        estimate.cycles_used,
        estimate.mean_cycle,
        tv_counts,
        tv_closed
            .map(|tv| format!(", TV(regenerative, closed form) = {tv:.4}"))
            .unwrap_or_default(),
        cfg.output.dir
    ))
}
