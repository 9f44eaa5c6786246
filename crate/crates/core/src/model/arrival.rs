use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LawError, SystemState};

/// State-dependent modulation factor for [`ArrivalLaw::count_times_factor`].
/// Values stay in `(0, 1]` so the declared envelopes are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateFactor {
    /// No modulation.
    One,
    /// `floor + (1 - floor) * exp(-rate * x0)`: intensity relaxes towards
    /// `floor` as the time since the last arrival grows.
    ExpDecayX0 { floor: f64, rate: f64 },
}

impl StateFactor {
    fn validate(&self) -> Result<(), LawError> {
        match *self {
            StateFactor::One => Ok(()),
            StateFactor::ExpDecayX0 { floor, rate } => {
                if !(floor > 0.0 && floor <= 1.0) || !floor.is_finite() {
                    return Err(LawError::BadFactor("floor must lie in (0, 1]"));
                }
                if !rate.is_finite() || rate <= 0.0 {
                    return Err(LawError::BadFactor("rate must be positive and finite"));
                }
                Ok(())
            }
        }
    }

    fn eval_x0(&self, x0: f64) -> f64 {
        match *self {
            StateFactor::One => 1.0,
            StateFactor::ExpDecayX0 { floor, rate } => floor + (1.0 - floor) * (-rate * x0).exp(),
        }
    }

    /// Infimum over all states (not necessarily attained).
    fn inf(&self) -> f64 {
        match *self {
            StateFactor::One => 1.0,
            StateFactor::ExpDecayX0 { floor, .. } => floor,
        }
    }
}

/// Extension of a per-count rate list beyond its last entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerCountTail {
    /// Rates continue at the last listed value.
    HoldLast,
    /// Rates vanish beyond the list (arrivals stop at high counts).
    Zero,
}

/// Envelope data a custom evaluator must declare about itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeclaredBounds {
    /// Supremum of `lambda(x) / max(n, 1)` over all states.
    pub big_lambda: f64,
    /// Infimum of the intensity over idle states.
    pub lambda0_min: f64,
    /// Supremum of the intensity over idle states.
    pub lambda0_max: f64,
}

#[derive(Clone)]
enum Kind {
    Constant {
        lambda: f64,
    },
    PerCount {
        rates: Vec<f64>,
        tail: PerCountTail,
    },
    CountTimesFactor {
        lambda: f64,
        factor: StateFactor,
    },
    Custom {
        eval: Arc<dyn Fn(&SystemState) -> f64 + Send + Sync>,
        declared: DeclaredBounds,
    },
}

/// Arrival intensity `lambda(x)` together with the envelope data the
/// simulator and the stability conditions need.
///
/// Construction validates the standing assumptions: the idle-state intensity
/// is bounded away from zero and infinity, and `lambda(x) / max(n, 1)` is
/// bounded above by a finite constant exposed as [`ArrivalLaw::big_lambda`].
#[derive(Clone)]
pub struct ArrivalLaw {
    kind: Kind,
    big_lambda: f64,
    lambda0_min: f64,
    lambda0_max: f64,
}

impl std::fmt::Debug for ArrivalLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Constant { lambda } => write!(f, "ArrivalLaw::Constant({lambda})"),
            Kind::PerCount { rates, tail } => {
                write!(f, "ArrivalLaw::PerCount({rates:?}, {tail:?})")
            }
            Kind::CountTimesFactor { lambda, factor } => {
                write!(f, "ArrivalLaw::CountTimesFactor({lambda}, {factor:?})")
            }
            Kind::Custom { declared, .. } => write!(f, "ArrivalLaw::Custom({declared:?})"),
        }
    }
}

impl ArrivalLaw {
    /// Constant intensity `lambda > 0`, whatever the state.
    pub fn constant(lambda: f64) -> Result<Self, LawError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(LawError::BadParameter {
                what: "constant arrival rate",
                value: lambda,
            });
        }
        Ok(Self {
            kind: Kind::Constant { lambda },
            big_lambda: lambda,
            lambda0_min: lambda,
            lambda0_max: lambda,
        })
    }

    /// Intensity depending on the customer count only: `rates[n]` while the
    /// list lasts, extended by `tail`. `rates[0]` must be positive.
    pub fn per_count(rates: Vec<f64>, tail: PerCountTail) -> Result<Self, LawError> {
        if rates.is_empty() || !rates.iter().all(|r| r.is_finite() && *r >= 0.0) || rates[0] <= 0.0
        {
            return Err(LawError::BadRateList);
        }
        // lambda(n) / max(n,1) is maximised within the listed range: beyond
        // it the numerator is constant (or zero) while n grows
        let big_lambda = (0..rates.len())
            .map(|n| rates[n] / (n.max(1) as f64))
            .fold(0.0, f64::max);
        let lambda0 = rates[0];
        Ok(Self {
            kind: Kind::PerCount { rates, tail },
            big_lambda,
            lambda0_min: lambda0,
            lambda0_max: lambda0,
        })
    }

    /// `lambda * max(n, 1) * factor(x)` with `factor` in `(0, 1]`; the
    /// factor may read the arrival clock, so the idle-state intensity
    /// genuinely depends on `x0`.
    pub fn count_times_factor(lambda: f64, factor: StateFactor) -> Result<Self, LawError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(LawError::BadParameter {
                what: "count-times-factor base rate",
                value: lambda,
            });
        }
        factor.validate()?;
        Ok(Self {
            kind: Kind::CountTimesFactor { lambda, factor },
            big_lambda: lambda,
            lambda0_min: lambda * factor.inf(),
            lambda0_max: lambda,
        })
    }

    /// Arbitrary evaluator with caller-declared envelopes. The declaration
    /// is trusted at construction and can be spot-checked with
    /// [`ArrivalLaw::audit_envelope`]; the simulator also fails hard the
    /// moment an observed intensity exceeds the declared envelope.
    pub fn custom(
        eval: Arc<dyn Fn(&SystemState) -> f64 + Send + Sync>,
        declared: DeclaredBounds,
    ) -> Result<Self, LawError> {
        let DeclaredBounds {
            big_lambda,
            lambda0_min,
            lambda0_max,
        } = declared;
        let ok = big_lambda.is_finite()
            && lambda0_min.is_finite()
            && lambda0_max.is_finite()
            && lambda0_min > 0.0
            && lambda0_min <= lambda0_max
            && lambda0_max <= big_lambda;
        if !ok {
            return Err(LawError::BadDeclaredBounds);
        }
        Ok(Self {
            kind: Kind::Custom { eval, declared },
            big_lambda,
            lambda0_min,
            lambda0_max,
        })
    }

    /// Intensity at state `x`.
    pub fn rate(&self, x: &SystemState) -> f64 {
        match &self.kind {
            Kind::Constant { lambda } => *lambda,
            Kind::PerCount { .. } => self.count_rate(x.n()).unwrap(),
            Kind::CountTimesFactor { lambda, factor } => {
                lambda * (x.n().max(1) as f64) * factor.eval_x0(x.x0())
            }
            Kind::Custom { eval, .. } => eval(x),
        }
    }

    /// Intensity at `x` drifted by `dt`, avoiding the intermediate state
    /// allocation for the built-in families.
    pub fn rate_after(&self, x: &SystemState, dt: f64) -> f64 {
        match &self.kind {
            Kind::Constant { lambda } => *lambda,
            Kind::PerCount { .. } => self.count_rate(x.n()).unwrap(),
            Kind::CountTimesFactor { lambda, factor } => {
                lambda * (x.n().max(1) as f64) * factor.eval_x0(x.x0() + dt)
            }
            Kind::Custom { eval, .. } => eval(&x.advance(dt).expect("nonnegative drift increment")),
        }
    }

    /// The envelope constant: supremum of `lambda(x) / max(n, 1)`.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// Infimum of the intensity over idle states.
    pub fn lambda0_min(&self) -> f64 {
        self.lambda0_min
    }

    /// Supremum of the intensity over idle states.
    pub fn lambda0_max(&self) -> f64 {
        self.lambda0_max
    }

    /// Supremum of the intensity over states with count `n`.
    pub fn level_sup(&self, n: usize) -> f64 {
        match &self.kind {
            Kind::Constant { lambda } => *lambda,
            Kind::PerCount { .. } => self.count_rate(n).unwrap(),
            Kind::CountTimesFactor { lambda, .. } => lambda * (n.max(1) as f64),
            Kind::Custom { declared, .. } => declared.big_lambda * (n.max(1) as f64),
        }
    }

    /// The intensity as a function of the count alone, when the law depends
    /// on nothing else. Product-form stationary laws exist exactly in this
    /// case.
    pub fn count_rate(&self, n: usize) -> Option<f64> {
        match &self.kind {
            Kind::Constant { lambda } => Some(*lambda),
            Kind::PerCount { rates, tail } => Some(if n < rates.len() {
                rates[n]
            } else {
                match tail {
                    PerCountTail::HoldLast => rates[rates.len() - 1],
                    PerCountTail::Zero => 0.0,
                }
            }),
            _ => None,
        }
    }

    /// Randomized spot check of the declared envelopes: samples states with
    /// counts up to 20 and clocks spread over several decades and verifies
    /// `lambda(x) <= level_sup(n)` everywhere, plus the idle-state bracket
    /// `lambda0_min <= lambda(x) <= lambda0_max`. Returns the first
    /// violation found.
    pub fn audit_envelope(&self, seed: u64, samples: usize) -> Result<(), LawError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clock = |rng: &mut ChaCha8Rng| -> f64 {
            if rng.gen::<f64>() < 0.2 {
                0.0
            } else {
                // log-uniform over [1e-6, 1e3]
                let u: f64 = rng.gen();
                (1e-6f64.ln() + u * (1e3f64.ln() - 1e-6f64.ln())).exp()
            }
        };
        for _ in 0..samples {
            let n = rng.gen_range(0..=20usize);
            let x0 = clock(&mut rng);
            let elapsed: Vec<f64> = (0..n).map(|_| clock(&mut rng)).collect();
            let x = SystemState::new(x0, elapsed).expect("sampled coordinates are finite");
            let rate = self.rate(&x);
            let bound = self.level_sup(n).min(self.big_lambda * (n.max(1) as f64));
            if !(rate.is_finite() && rate >= 0.0) || rate > bound {
                return Err(LawError::EnvelopeViolation { rate, bound, n });
            }
            if n == 0 && (rate < self.lambda0_min || rate > self.lambda0_max) {
                return Err(LawError::EnvelopeViolation {
                    rate,
                    bound: self.lambda0_max,
                    n,
                });
            }
        }
        Ok(())
    }
}
