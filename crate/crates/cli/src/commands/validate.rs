use std::fmt::Write as _;

use esq_core::model::check_conditions;

use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

const ENVELOPE_SAMPLES: usize = 10_000;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let service = cfg.service_law()?;
    let params = cfg.lyapunov_params()?;

    let report = check_conditions(&arrival, &service, &params);
    let envelope = arrival.audit_envelope(cfg.sim.seed, ENVELOPE_SAMPLES);

    let mut text = String::new();
    writeln!(text, "{report}").unwrap();
    match &envelope {
        Ok(()) => writeln!(
            text,
            "arrival envelope audit on {ENVELOPE_SAMPLES} random states ... ok"
        )
        .unwrap(),
        Err(e) => writeln!(text, "arrival envelope audit ... FAILED: {e}").unwrap(),
    }
    let ok = report.all_ok() && envelope.is_ok();
    writeln!(
        text,
        "verdict: {}",
        if ok { "admissible" } else { "REJECTED" }
    )
    .unwrap();

    let mut run = RunContext::create(cfg, "validate")?;
    run.write_file("report.txt", &text)?;
    run.finish()?;

    if ok {
        Ok(format!(
            "conditions hold (main margin {:+.6}); report written to {}",
            report.margins.main, cfg.output.dir
        ))
    } else {
        Err(AppError::Audit(format!(
            "conditions do not hold; see {}/report.txt\n{text}",
            cfg.output.dir
        )))
    }
}
