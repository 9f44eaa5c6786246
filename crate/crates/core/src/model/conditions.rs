use std::fmt;

use super::{ArrivalLaw, HazardFloor, LyapunovParams, ServiceLaw};

/// The certified hazard floor next to the constant it has to clear.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardCertificate {
    /// `inf_t (1 + t) h(t)`, with provenance (analytic or sampled).
    pub floor: HazardFloor,
    /// The constant `c0` the floor is checked against.
    pub required: f64,
}

/// Signed slack of each stability condition; nonnegative (or strictly
/// positive where noted) means the condition holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionMargins {
    /// `inf (1+t) h(t) - c0`; the floor may be attained, so zero passes.
    pub hazard: f64,
    /// `c0 - b*(m + big_lambda*2^b)` at `b = a + (ell+1)/m`; strict.
    pub main: f64,
    /// Same at `b = a`; strict.
    pub weak: f64,
    /// Same at `b = a + ell/m`; strict.
    pub aprime: f64,
}

/// Everything the stability theory asks of a model, evaluated in one place.
///
/// The three rate conditions share the shape `c0 > b*(m + big_lambda*2^b)`
/// and differ only in the exponent `b`; since that expression grows with
/// `b`, the main condition implies the other two.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub hazard_ok: bool,
    pub bounds_ok: bool,
    pub main_condition_ok: bool,
    pub weak_condition_ok: bool,
    pub aprime_condition_ok: bool,
    pub margins: ConditionMargins,
    pub certificate: HazardCertificate,
    pub big_lambda: f64,
    pub lambda0_min: f64,
    pub lambda0_max: f64,
}

impl ConditionReport {
    /// True when the full polynomial-rate machinery applies.
    pub fn all_ok(&self) -> bool {
        self.hazard_ok && self.bounds_ok && self.main_condition_ok
    }
}

fn rate_rhs(b: f64, m: f64, big_lambda: f64) -> f64 {
    b * (m + big_lambda * 2f64.powf(b))
}

/// Checks the hazard floor, the arrival envelopes, and the three rate
/// conditions for the given exponents.
pub fn check_conditions(
    arrival: &ArrivalLaw,
    service: &ServiceLaw,
    params: &LyapunovParams,
) -> ConditionReport {
    let floor = service.hazard_floor();
    let big_lambda = arrival.big_lambda();
    let lambda0_min = arrival.lambda0_min();
    let lambda0_max = arrival.lambda0_max();
    let LyapunovParams { c0, m, a, .. } = *params;

    let margins = ConditionMargins {
        hazard: floor.value - c0,
        main: c0 - rate_rhs(params.a_main(), m, big_lambda),
        weak: c0 - rate_rhs(a, m, big_lambda),
        aprime: c0 - rate_rhs(params.a_prime(), m, big_lambda),
    };
    ConditionReport {
        hazard_ok: margins.hazard >= 0.0,
        bounds_ok: lambda0_min > 0.0 && big_lambda.is_finite() && lambda0_max >= lambda0_min,
        main_condition_ok: margins.main > 0.0,
        weak_condition_ok: margins.weak > 0.0,
        aprime_condition_ok: margins.aprime > 0.0,
        margins,
        certificate: HazardCertificate {
            floor,
            required: c0,
        },
        big_lambda,
        lambda0_min,
        lambda0_max,
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cert = &self.certificate;
        let provenance = if cert.floor.analytic {
            "analytic".to_string()
        } else {
            format!("sampled on {} points", cert.floor.grid_points)
        };
        writeln!(
            f,
            "hazard floor   {:>12.6} at t = {:<10.4} ({provenance}), need >= {} ... {}",
            cert.floor.value,
            cert.floor.worst_t,
            cert.required,
            mark(self.hazard_ok)
        )?;
        writeln!(
            f,
            "arrival bounds big_lambda = {}, idle intensity in [{}, {}] ... {}",
            self.big_lambda,
            self.lambda0_min,
            self.lambda0_max,
            mark(self.bounds_ok)
        )?;
        writeln!(
            f,
            "main condition   margin {:+.6} ... {}",
            self.margins.main,
            mark(self.main_condition_ok)
        )?;
        writeln!(
            f,
            "weak condition   margin {:+.6} ... {}",
            self.margins.weak,
            mark(self.weak_condition_ok)
        )?;
        write!(
            f,
            "a' condition     margin {:+.6} ... {}",
            self.margins.aprime,
            mark(self.aprime_condition_ok)
        )
    }
}
