use std::fmt::Write as _;

use esq_core::analysis::convergence_constants;

use crate::config::ExperimentConfig;
use crate::manifest::RunContext;
use crate::AppError;

pub fn run(cfg: &ExperimentConfig) -> Result<String, AppError> {
    let arrival = cfg.arrival_law()?;
    let params = cfg.lyapunov_params()?;
    let n = cfg.constants.n_threshold;

    let mut text = String::new();
    writeln!(
        text,
        "idle intensity in [{}, {}], big_lambda = {}, n_threshold = {n}",
        arrival.lambda0_min(),
        arrival.lambda0_max(),
        arrival.big_lambda()
    )
    .unwrap();

    let result = convergence_constants(&arrival, &params, n);
    match &result {
        Ok(c) => {
            writeln!(
                text,
                "idle one-arrival probability (unit interval)  {:.5}  ({})",
                c.idle_to_regen_prob, c.idle_to_regen_prob
            )
            .unwrap();
            writeln!(
                text,
                "cycle energy-moment coefficient               {:.5}  ({})",
                c.cycle_moment_coeff, c.cycle_moment_coeff
            )
            .unwrap();
            writeln!(
                text,
                "population return probability (N = {n})        {:.5}  ({}{})",
                c.population_return_prob,
                c.population_return_prob,
                if c.population_return_clamped {
                    ", clamped to 1"
                } else {
                    ""
                }
            )
            .unwrap();
        }
        Err(e) => writeln!(text, "UNDEFINED: {e}").unwrap(),
    }

    let mut run = RunContext::create(cfg, "constants")?;
    run.write_file("constants.txt", &text)?;
    run.finish()?;

    match result {
        Ok(c) => Ok(format!(
            "idle one-arrival probability {:.5}, moment coefficient {:.5}, return probability {:.5}; written to {}",
            c.idle_to_regen_prob, c.cycle_moment_coeff, c.population_return_prob, cfg.output.dir
        )),
        Err(e) => Err(AppError::Audit(format!(
            "constants undefined for this model: {e}"
        ))),
    }
}
