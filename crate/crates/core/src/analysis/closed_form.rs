use super::pmf::DiscretePmf;
use super::AnalysisError;
use crate::model::{ArrivalLaw, ServiceLaw};

const BD_STATE_CAP: usize = 100_000;
const BD_TAIL_TOL: f64 = 1e-12;

/// Stationary law of a birth-death chain with rates `birth(n)` up and
/// `death(n)` down, `pi(n+1) = pi(n) * birth(n) / death(n+1)`.
///
/// The series is truncated once a geometric majorant of the remaining tail
/// drops below `1e-12` of the accumulated mass (or at the first zero birth
/// rate); if that never happens within 100000 states the chain is treated
/// as non-normalizable.
pub fn birth_death_stationary(
    birth: impl Fn(usize) -> f64,
    death: impl Fn(usize) -> f64,
) -> Result<DiscretePmf, AnalysisError> {
    let mut weights = vec![1.0f64];
    let mut sum = 1.0;
    loop {
        let n = weights.len() - 1;
        if n + 1 == BD_STATE_CAP {
            return Err(AnalysisError::NonConvergent(BD_STATE_CAP));
        }
        let b = birth(n);
        if !(b.is_finite() && b >= 0.0) {
            return Err(AnalysisError::BadInput(
                "birth rates must be finite and nonnegative",
            ));
        }
        if b == 0.0 {
            break;
        }
        let d = death(n + 1);
        if !(d.is_finite() && d > 0.0) {
            return Err(AnalysisError::BadInput("death rates must be positive"));
        }
        let r = b / d;
        let next = weights.last().unwrap() * r;
        weights.push(next);
        sum += next;
        if r < 1.0 && next * r / (1.0 - r) < BD_TAIL_TOL * sum {
            break;
        }
        if sum > 1e250 {
            // normalization is deferred, so mid-stream rescaling is free
            for w in &mut weights {
                *w /= sum;
            }
            sum = 1.0;
        }
    }
    let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    DiscretePmf::new(probs).map_err(|_| AnalysisError::BadInput("degenerate birth-death weights"))
}

/// Joint stationary density of the elapsed service times, evaluated at a
/// configuration with `elapsed.len()` customers: the count mass at zero
/// from the matching unit-output birth-death chain, times
/// `prod_i lambda(i-1) * (1 - G(x_i))`.
///
/// Only defined when the arrival intensity depends on the count alone.
/// Integrating out the elapsed coordinates recovers the count law of that
/// chain (each factor integrates to `lambda(i-1) * mean`).
pub fn fortet_density(
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    elapsed: &[f64],
) -> Result<f64, AnalysisError> {
    if elapsed.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(AnalysisError::BadInput(
            "elapsed times must be finite and nonnegative",
        ));
    }
    if arrival.count_rate(0).is_none() {
        return Err(AnalysisError::BadInput(
            "arrival intensity must depend on the count only",
        ));
    }
    let rate = |n: usize| arrival.count_rate(n).unwrap();
    let mean = service.mean();
    let pmf = birth_death_stationary(rate, |_| 1.0 / mean)?;
    let mut p = pmf.get(0);
    for (i, &x) in elapsed.iter().enumerate() {
        p *= rate(i) * service.survival(x);
    }
    Ok(p)
}

/// Density of the stationary elapsed (equilibrium) age of one service:
/// `(1 - G(t)) / mean`.
pub fn equilibrium_elapsed_density(service: &ServiceLaw, t: f64) -> f64 {
    service.survival(t) / service.mean()
}

/// Distribution function of the stationary elapsed age:
/// `int_0^t (1 - G(u)) du / mean`.
pub fn equilibrium_elapsed_cdf(service: &ServiceLaw, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (service.integrated_survival(t) / service.mean()).min(1.0)
}
