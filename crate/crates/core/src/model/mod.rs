//! States, laws, test functions, and stability conditions.

mod arrival;
mod conditions;
mod lyapunov;
mod service;
mod state;

pub use arrival::{ArrivalLaw, DeclaredBounds, PerCountTail, StateFactor};
pub use conditions::{check_conditions, ConditionMargins, ConditionReport, HazardCertificate};
pub use lyapunov::{
    drift_upper_bound, generator_terms, lyapunov, lyapunov_time, DriftError, GeneratorTerms,
    LyapunovParams,
};
pub use service::{HazardFloor, ServiceLaw};
pub use state::{StateError, SystemState};

use thiserror::Error;

/// Construction-time validation failures for service and arrival laws.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LawError {
    #[error("{what} must be positive and finite, got {value}")]
    BadParameter { what: &'static str, value: f64 },
    #[error("hazard exponent must exceed 1 so that the mean service time is finite, got {0}")]
    HeavyTail(f64),
    #[error(
        "table law needs at least two knots, starting at t = 0 with strictly increasing times"
    )]
    BadKnots,
    #[error("table hazard values must be nonnegative and finite, with the final value positive")]
    BadKnotHazard,
    #[error(
        "per-count law needs a nonempty rate list with finite nonnegative entries and rates[0] > 0"
    )]
    BadRateList,
    #[error("state factor must stay within (0, 1]: {0}")]
    BadFactor(&'static str),
    #[error(
        "declared bounds must satisfy 0 < lambda0_min <= lambda0_max <= big_lambda < infinity"
    )]
    BadDeclaredBounds,
    #[error("residual sample inputs must be finite and nonnegative (s = {s}, e = {e})")]
    BadResidualInput { s: f64, e: f64 },
    #[error(
        "arrival envelope violated: law returned {rate} at a state with count {n}, \
         declared supremum allows {bound}"
    )]
    EnvelopeViolation { rate: f64, bound: f64, n: usize },
}
