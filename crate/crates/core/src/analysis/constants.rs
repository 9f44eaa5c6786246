use super::AnalysisError;
use crate::model::{ArrivalLaw, LyapunovParams};

/// The explicit constants entering the convergence-rate bounds. All three
/// are probabilities or moment coefficients of concrete events, so they are
/// directly checkable against simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConstants {
    /// Lower bound on the probability that an idle system receives exactly
    /// one arrival during a unit interval driven only by the guaranteed
    /// intensity: `(1 - e^{-lambda0_min}) * e^{-2 (lambda0_max - lambda0_min)}`.
    pub idle_to_regen_prob: f64,
    /// Coefficient bounding the stationary moment of the energy function:
    /// `big_lambda (c0 + 1) / ((big_lambda + c0 + 1)(c0 - a'(m + big_lambda)))`
    /// with `a' = a + ell/m`.
    pub cycle_moment_coeff: f64,
    /// Lower bound on the probability that the population drops below a
    /// threshold `N` within a unit interval: `(c0 / (N + 2))^2`, clamped
    /// to 1 when the raw expression exceeds it.
    pub population_return_prob: f64,
    pub population_return_clamped: bool,
}

/// Evaluates the constants for a model and a population threshold `n_threshold`.
pub fn convergence_constants(
    arrival: &ArrivalLaw,
    params: &LyapunovParams,
    n_threshold: usize,
) -> Result<ConvergenceConstants, AnalysisError> {
    let lo = arrival.lambda0_min();
    let hi = arrival.lambda0_max();
    let big_lambda = arrival.big_lambda();
    let c0 = params.c0;

    let idle_to_regen_prob = (-(-lo).exp_m1()) * (-2.0 * (hi - lo)).exp();

    let denom_margin = c0 - params.a_prime() * (params.m + big_lambda);
    if denom_margin <= 0.0 {
        return Err(AnalysisError::UndefinedConstant(
            "moment coefficient needs c0 > a' * (m + big_lambda)",
        ));
    }
    let cycle_moment_coeff = big_lambda * (c0 + 1.0) / ((big_lambda + c0 + 1.0) * denom_margin);

    let raw = (c0 / (n_threshold as f64 + 2.0)).powi(2);
    let population_return_clamped = raw > 1.0;
    let population_return_prob = raw.min(1.0);

    Ok(ConvergenceConstants {
        idle_to_regen_prob,
        cycle_moment_coeff,
        population_return_prob,
        population_return_clamped,
    })
}
