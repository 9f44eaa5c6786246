use thiserror::Error;

use super::{ArrivalLaw, ServiceLaw, SystemState};

/// Exponents for the energy functions and the negative-drift machinery.
///
/// `c0` is the hazard floor constant the service law must certify, `m` and
/// `a` shape the energy function, `ell` is the polynomial moment order the
/// drift argument targets, and `k < ell` is the time-weight exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovParams {
    pub c0: f64,
    pub m: f64,
    pub a: f64,
    pub ell: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DriftError {
    #[error("the drift bound applies to busy states only")]
    Idle,
    #[error("c0 must exceed a*(m + big_lambda*2^a) for a negative drift; margin {margin}")]
    WeakConditionFailed { margin: f64 },
}

impl LyapunovParams {
    pub fn new(c0: f64, m: f64, a: f64, ell: f64, k: f64) -> Result<Self, super::LawError> {
        let all_finite = [c0, m, a, ell, k].iter().all(|v| v.is_finite());
        let bad = |what, value| Err(super::LawError::BadParameter { what, value });
        if !all_finite || c0 <= 0.0 {
            return bad("drift constant c0", c0);
        }
        if m <= 1.0 {
            return bad("energy exponent m", m);
        }
        if a < 1.0 {
            return bad("energy exponent a", a);
        }
        if ell <= 0.0 {
            return bad("moment order ell", ell);
        }
        if k <= 0.0 || k >= ell {
            return bad("time-weight exponent k", k);
        }
        Ok(Self { c0, m, a, ell, k })
    }

    /// Boosted outer exponent `a + ell/m` used by the moment bounds.
    pub fn a_prime(&self) -> f64 {
        self.a + self.ell / self.m
    }

    /// Outer exponent `a + (ell+1)/m` the strongest condition is stated at.
    pub fn a_main(&self) -> f64 {
        self.a + (self.ell + 1.0) / self.m
    }
}

/// Energy of a state: `(sum_j (1 + x_j)^m)^a` over the elapsed service
/// times, zero when nobody is in service. The arrival clock does not enter.
pub fn lyapunov(x: &SystemState, m: f64, a: f64) -> f64 {
    debug_assert!(m >= 1.0 && a >= 0.0);
    inner_sum(x, m).powf(a)
}

/// Time-weighted energy `(1 + t)^k * lyapunov(x, m, a)`.
pub fn lyapunov_time(t: f64, x: &SystemState, m: f64, a: f64, k: f64) -> f64 {
    debug_assert!(t >= 0.0);
    (1.0 + t).powf(k) * lyapunov(x, m, a)
}

fn inner_sum(x: &SystemState, m: f64) -> f64 {
    x.elapsed().iter().map(|&t| (1.0 + t).powf(m)).sum()
}

/// The three pieces of the generator applied to the energy function:
/// arrivals add a fresh coordinate, departures remove one, and between
/// events every coordinate ages at unit speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorTerms {
    pub arrival_gain: f64,
    pub service_loss: f64,
    pub aging_drift: f64,
}

impl GeneratorTerms {
    pub fn net(&self) -> f64 {
        self.arrival_gain - self.service_loss + self.aging_drift
    }
}

/// Evaluates the generator of the process on the energy function at `x`.
///
/// `arrival_gain = lambda(x) * (L(x + fresh coordinate) - L(x))`,
/// `service_loss = sum_i h(x_i) * (L(x) - L(x without i))`,
/// `aging_drift  = d/dt L(x aged by t) at t = 0`.
pub fn generator_terms(
    x: &SystemState,
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    m: f64,
    a: f64,
) -> GeneratorTerms {
    assert!(m >= 1.0 && a >= 1.0, "energy exponents must be >= 1");
    let s = inner_sum(x, m);
    let l = s.powf(a);
    let arrival_gain = arrival.rate(x) * ((s + 1.0).powf(a) - l);
    let mut service_loss = 0.0;
    let mut aging_sum = 0.0;
    for &t in x.elapsed() {
        let u = (1.0 + t).powf(m);
        // s - u can round slightly negative when one coordinate dominates
        service_loss += service.hazard(t) * (l - (s - u).max(0.0).powf(a));
        aging_sum += (1.0 + t).powf(m - 1.0);
    }
    let aging_drift = m * a * s.powf(a - 1.0) * aging_sum;
    GeneratorTerms {
        arrival_gain,
        service_loss,
        aging_drift,
    }
}

/// Closed-form majorant of the generator on busy states:
/// `-(c0 - a*m - a*big_lambda*2^a) * sum_j (1+x_j)^(m-1) * (sum_j (1+x_j)^m)^(a-1)`.
///
/// Valid whenever the service hazard satisfies `h(t) >= c0 / (1 + t)` and
/// the arrival intensity satisfies `lambda(x) <= big_lambda * max(n, 1)`;
/// callers certify both via [`check_conditions`](super::check_conditions).
pub fn drift_upper_bound(
    x: &SystemState,
    params: &LyapunovParams,
    big_lambda: f64,
) -> Result<f64, DriftError> {
    if x.is_idle() {
        return Err(DriftError::Idle);
    }
    let LyapunovParams { c0, m, a, .. } = *params;
    let margin = c0 - a * (m + big_lambda * 2f64.powf(a));
    if margin <= 0.0 {
        return Err(DriftError::WeakConditionFailed { margin });
    }
    let s = inner_sum(x, m);
    let lower = inner_sum(x, m - 1.0);
    Ok(-margin * lower * s.powf(a - 1.0))
}
