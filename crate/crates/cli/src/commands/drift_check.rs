use std::fmt::Write as _;

use rand::Rng;

use esq_core::model::{check_conditions, drift_upper_bound, generator_terms, lyapunov};
use esq_core::simulator::rng::{stream, StreamRole};
use esq_core::SystemState;

use super::{flag, num};
use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let params = cfg.lyapunov_params()?;
    let d = &cfg.drift_check;

    let report = check_conditions(&arrival, &service, &params);
    let envelope = arrival.audit_envelope(cfg.sim.seed, d.states);

    let mut text = String::new();
    writeln!(text, "{report}").unwrap();
    match &envelope {
        Ok(()) => writeln!(
            text,
            "arrival envelope audit on {} random states ... ok",
            d.states
        )
        .unwrap(),
        Err(e) => writeln!(text, "arrival envelope audit ... FAILED: {e}").unwrap(),
    }

    // the majorant only holds under the hazard floor, the declared envelopes,
    // and a positive weak margin; without them there is nothing to check
    // against
    let applicable =
        report.hazard_ok && report.bounds_ok && report.weak_condition_ok && envelope.is_ok();

    let mut violations = 0usize;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut table = String::from("state,n,energy,net,bound,ok\n");
    if applicable {
        let mut rng = stream(cfg.sim.seed, 0, StreamRole::Scratch);
        for i in 0..d.states {
            let n = rng.gen_range(1..=d.max_n);
            let x0 = rng.gen::<f64>() * d.max_elapsed;
            let elapsed: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * d.max_elapsed).collect();
            let x = SystemState::new(x0, elapsed).expect("coordinates are finite and nonnegative");

            let net = generator_terms(&x, &arrival, &service, params.m, params.a).net();
            let bound = drift_upper_bound(&x, &params, report.big_lambda)
                .expect("busy state under a positive weak margin");
            let ok = bound < 0.0 && net <= bound + 1e-9 * bound.abs();
            violations += !ok as usize;
            worst_gap = worst_gap.max(net - bound);
            writeln!(
                table,
                "{i},{n},{},{},{},{}",
                num(lyapunov(&x, params.m, params.a)),
                num(net),
                num(bound),
                flag(ok)
            )
            .unwrap();
        }
        writeln!(
            text,
            "drift majorant on {} random states (n <= {}, elapsed <= {}): {} violations, worst net - bound = {}",
            d.states,
            d.max_n,
            num(d.max_elapsed),
            violations,
            num(worst_gap)
        )
        .unwrap();
    } else {
        writeln!(text, "drift majorant not applicable; no states sampled").unwrap();
    }

    let passed = applicable && violations == 0;
    writeln!(
        text,
        "verdict: {}",
        if passed { "dominated" } else { "REJECTED" }
    )
    .unwrap();

    let mut run = RunContext::create(cfg, "drift-check")?;
    run.write_file("report.txt", &text)?;
    run.write_file("drift.csv", &table)?;
    run.finish()?;

    if passed {
        Ok(format!(
            "generator dominated by the drift bound on all {} states (worst gap {:.3e}); outputs in {}",
            d.states, worst_gap, cfg.output.dir
        ))
    } else {
        Err(AppError::Audit(format!(
            "drift domination does not hold; see {}/report.txt\n{text}",
            cfg.output.dir
        )))
    }
}
