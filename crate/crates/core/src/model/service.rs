use super::LawError;
use crate::math::{adaptive_simpson, ln_gamma};

/// Relative tolerance for inverting the cumulative hazard of a table law.
const RESIDUAL_REL_TOL: f64 = 1e-10;

/// Log-spaced certificate grid for hazard floors of table laws.
const FLOOR_GRID_POINTS: usize = 10_000;
const FLOOR_GRID_LO: f64 = 1e-6;
const FLOOR_GRID_HI: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// h(t) = alpha / (1 + t), survival (1 + t)^{-alpha}.
    ParetoHazard { alpha: f64 },
    /// Constant hazard mu.
    Exponential { mu: f64 },
    /// h(t) = (shape/scale) * (t/scale)^{shape-1}.
    Weibull { shape: f64, scale: f64 },
    /// Piecewise-linear hazard through knots, constant beyond the last one.
    /// `cum[i]` caches the cumulative hazard at knot i.
    Table {
        ts: Vec<f64>,
        hs: Vec<f64>,
        cum: Vec<f64>,
    },
}

/// Service-time law specified through its hazard rate `h`.
///
/// With `H(t) = \int_0^t h`, the time in service has distribution
/// `G(t) = 1 - exp(-H(t))`. Every built-in family keeps `H(t) -> inf`
/// and a finite mean, which construction enforces.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceLaw {
    kind: Kind,
}

/// Infimum of `(1 + t) h(t)` over `t >= 0`, with provenance.
///
/// For the closed families the value is analytic; for table laws it is a
/// sampled certificate on a log grid plus the knots, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardFloor {
    pub value: f64,
    pub worst_t: f64,
    pub analytic: bool,
    pub grid_points: usize,
}

impl ServiceLaw {
    /// Hazard `alpha / (1 + t)`. Requires `alpha > 1` so the mean is finite.
    pub fn pareto_hazard(alpha: f64) -> Result<Self, LawError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(LawError::BadParameter {
                what: "pareto-hazard alpha",
                value: alpha,
            });
        }
        if alpha <= 1.0 {
            return Err(LawError::HeavyTail(alpha));
        }
        Ok(Self {
            kind: Kind::ParetoHazard { alpha },
        })
    }

    /// Constant hazard `mu > 0`.
    pub fn exponential(mu: f64) -> Result<Self, LawError> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(LawError::BadParameter {
                what: "exponential mu",
                value: mu,
            });
        }
        Ok(Self {
            kind: Kind::Exponential { mu },
        })
    }

    /// Weibull law with the given shape and scale, both positive.
    pub fn weibull(shape: f64, scale: f64) -> Result<Self, LawError> {
        if !shape.is_finite() || shape <= 0.0 {
            return Err(LawError::BadParameter {
                what: "weibull shape",
                value: shape,
            });
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(LawError::BadParameter {
                what: "weibull scale",
                value: scale,
            });
        }
        Ok(Self {
            kind: Kind::Weibull { shape, scale },
        })
    }

    /// Piecewise-linear hazard through `(t, h)` knots. Knot times must be
    /// strictly increasing and start at 0; hazards must be nonnegative and
    /// finite, with the final one positive (it extends as a constant, so the
    /// cumulative hazard diverges and the mean stays finite).
    pub fn table(knots: &[(f64, f64)]) -> Result<Self, LawError> {
        if knots.len() < 2 || knots[0].0 != 0.0 {
            return Err(LawError::BadKnots);
        }
        if !knots.windows(2).all(|w| w[0].0 < w[1].0) || !knots.iter().all(|k| k.0.is_finite()) {
            return Err(LawError::BadKnots);
        }
        if !knots.iter().all(|k| k.1.is_finite() && k.1 >= 0.0) {
            return Err(LawError::BadKnotHazard);
        }
        if knots[knots.len() - 1].1 <= 0.0 {
            return Err(LawError::BadKnotHazard);
        }
        let ts: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let hs: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let mut cum = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            // trapezoid: h is linear on the segment
            cum[i] = cum[i - 1] + 0.5 * (hs[i - 1] + hs[i]) * (ts[i] - ts[i - 1]);
        }
        Ok(Self {
            kind: Kind::Table { ts, hs, cum },
        })
    }

    /// Hazard rate at elapsed time `t >= 0`. For Weibull shapes below 1 the
    /// hazard diverges at 0 and this returns infinity there.
    pub fn hazard(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "hazard evaluated at negative time {t}");
        match &self.kind {
            Kind::ParetoHazard { alpha } => alpha / (1.0 + t),
            Kind::Exponential { mu } => *mu,
            Kind::Weibull { shape, scale } => (shape / scale) * (t / scale).powf(shape - 1.0),
            Kind::Table { ts, hs, .. } => {
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return hs[last];
                }
                let i = segment_index(ts, t);
                let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
                hs[i] + w * (hs[i + 1] - hs[i])
            }
        }
    }

    /// Cumulative hazard `H(t)`, exact for every family (piecewise quadratic
    /// for table laws).
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "cumulative hazard evaluated at negative time {t}");
        match &self.kind {
            Kind::ParetoHazard { alpha } => alpha * (1.0 + t).ln(),
            Kind::Exponential { mu } => mu * t,
            Kind::Weibull { shape, scale } => (t / scale).powf(*shape),
            Kind::Table { ts, hs, cum } => {
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return cum[last] + hs[last] * (t - ts[last]);
                }
                let i = segment_index(ts, t);
                let d = t - ts[i];
                let slope = (hs[i + 1] - hs[i]) / (ts[i + 1] - ts[i]);
                cum[i] + hs[i] * d + 0.5 * slope * d * d
            }
        }
    }

    /// Survival `1 - G(t) = exp(-H(t))`.
    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }

    /// Distribution function `G(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        -(-self.cumulative_hazard(t)).exp_m1()
    }

    /// Mean service time, `\int_0^inf exp(-H)`. Closed form except for table
    /// laws, which integrate the survival segment by segment and add the
    /// exact exponential tail.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::ParetoHazard { alpha } => 1.0 / (alpha - 1.0),
            Kind::Exponential { mu } => 1.0 / mu,
            Kind::Weibull { shape, scale } => scale * (ln_gamma(1.0 + 1.0 / shape)).exp(),
            Kind::Table { ts, hs, cum } => {
                let mut total = 0.0;
                for i in 1..ts.len() {
                    total += adaptive_simpson(
                        &|t| self.survival(t),
                        ts[i - 1],
                        ts[i],
                        1e-13 * (ts[i] - ts[i - 1]).max(1.0),
                    );
                }
                let last = ts.len() - 1;
                total + (-cum[last]).exp() / hs[last]
            }
        }
    }

    /// `int_0^t (1 - G(u)) du`, the partial expectation of the service
    /// time. Closed forms where they exist, quadrature otherwise.
    pub fn integrated_survival(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match &self.kind {
            Kind::ParetoHazard { alpha } => {
                (-((1.0 - alpha) * (1.0 + t).ln()).exp_m1()) / (alpha - 1.0)
            }
            Kind::Exponential { mu } => (-(-mu * t).exp_m1()) / mu,
            _ => adaptive_simpson(&|u| self.survival(u), 0.0, t, 1e-12 * t.max(1.0)),
        }
    }

    /// Residual service time of a customer with elapsed time `s`, given a
    /// unit-exponential variate `e`: the unique `r` with
    /// `H(s + r) - H(s) = e`. Closed form for the parametric families;
    /// table laws locate the segment and solve it with a safeguarded
    /// bracketed iteration to relative tolerance 1e-10.
    pub fn residual_service_sample(&self, s: f64, e: f64) -> Result<f64, LawError> {
        if !s.is_finite() || s < 0.0 || !e.is_finite() || e < 0.0 {
            return Err(LawError::BadResidualInput { s, e });
        }
        let r = match &self.kind {
            Kind::ParetoHazard { alpha } => (1.0 + s) * (e / alpha).exp_m1(),
            Kind::Exponential { mu } => e / mu,
            Kind::Weibull { shape, scale } => {
                let base = (s / scale).powf(*shape);
                scale * (e + base).powf(1.0 / shape) - s
            }
            Kind::Table { .. } => {
                let target = self.cumulative_hazard(s) + e;
                self.invert_table_cumhaz(target) - s
            }
        };
        Ok(r.max(0.0))
    }

    /// Supremum of the hazard over the window `[s, s + w]`; the thinning
    /// envelope for one customer. Infinite only for Weibull shapes below 1
    /// at `s = 0`, which the thinning engine reports as unusable.
    pub fn hazard_sup(&self, s: f64, w: f64) -> f64 {
        debug_assert!(s >= 0.0 && w >= 0.0);
        match &self.kind {
            Kind::ParetoHazard { .. } => self.hazard(s),
            Kind::Exponential { mu } => *mu,
            Kind::Weibull { shape, .. } => {
                if *shape >= 1.0 {
                    self.hazard(s + w)
                } else if s == 0.0 {
                    f64::INFINITY
                } else {
                    self.hazard(s)
                }
            }
            Kind::Table { ts, hs, .. } => {
                // piecewise linear: the maximum sits at an endpoint or a knot
                let mut sup = self.hazard(s).max(self.hazard(s + w));
                for (&t, &h) in ts.iter().zip(hs) {
                    if t > s && t < s + w {
                        sup = sup.max(h);
                    }
                }
                sup
            }
        }
    }

    /// Infimum of `(1 + t) h(t)` over all `t >= 0`.
    pub fn hazard_floor(&self) -> HazardFloor {
        match &self.kind {
            Kind::ParetoHazard { alpha } => HazardFloor {
                value: *alpha,
                worst_t: 0.0,
                analytic: true,
                grid_points: 0,
            },
            Kind::Exponential { mu } => HazardFloor {
                value: *mu,
                worst_t: 0.0,
                analytic: true,
                grid_points: 0,
            },
            Kind::Weibull { shape, scale } => {
                let (value, worst_t) = if *shape > 1.0 {
                    (0.0, 0.0) // hazard vanishes at 0
                } else if *shape == 1.0 {
                    (1.0 / scale, 0.0)
                } else {
                    // minimize (1+t) t^{shape-1}: stationary at t = (1-shape)/shape
                    let t = (1.0 - shape) / shape;
                    (
                        ((1.0 - shape) / shape).powf(shape - 1.0) / scale.powf(*shape),
                        t,
                    )
                };
                HazardFloor {
                    value,
                    worst_t,
                    analytic: true,
                    grid_points: 0,
                }
            }
            Kind::Table { ts, .. } => {
                let mut value = f64::INFINITY;
                let mut worst_t = 0.0;
                let mut consider = |t: f64| {
                    let v = (1.0 + t) * self.hazard(t);
                    if v < value {
                        value = v;
                        worst_t = t;
                    }
                };
                consider(0.0);
                for &t in ts {
                    consider(t);
                }
                let ratio = (FLOOR_GRID_HI / FLOOR_GRID_LO).ln() / (FLOOR_GRID_POINTS - 1) as f64;
                for i in 0..FLOOR_GRID_POINTS {
                    consider(FLOOR_GRID_LO * (ratio * i as f64).exp());
                }
                HazardFloor {
                    value,
                    worst_t,
                    analytic: false,
                    grid_points: FLOOR_GRID_POINTS + ts.len() + 1,
                }
            }
        }
    }

    /// First `t` with `H(t) = v` (table laws only). The prefix cache brackets
    /// the segment; within it the quadratic is solved directly and polished
    /// by bisection until the defect is below `RESIDUAL_REL_TOL`.
    fn invert_table_cumhaz(&self, v: f64) -> f64 {
        let Kind::Table { ts, hs, cum } = &self.kind else {
            unreachable!("table inversion on a parametric law");
        };
        let last = ts.len() - 1;
        if v >= cum[last] {
            return ts[last] + (v - cum[last]) / hs[last];
        }
        // first segment whose right endpoint reaches v
        let mut i = match cum.partition_point(|&c| c < v) {
            0 => 0,
            p => p - 1,
        };
        while cum[i + 1] < v {
            i += 1;
        }
        let dv = v - cum[i];
        if dv <= 0.0 {
            return ts[i];
        }
        let len = ts[i + 1] - ts[i];
        let slope = (hs[i + 1] - hs[i]) / len;
        // (slope/2) d^2 + h_i d - dv = 0, root continuous as slope -> 0
        let disc = (hs[i] * hs[i] + 2.0 * slope * dv).max(0.0);
        let denom = hs[i] + disc.sqrt();
        let mut d = if denom > 0.0 { 2.0 * dv / denom } else { len };
        d = d.clamp(0.0, len);
        // safeguarded bisection polish; the closed form already lands inside
        // tolerance except in degenerate float corners
        let (mut lo, mut hi) = (0.0, len);
        let seg = |d: f64| hs[i] * d + 0.5 * slope * d * d;
        for _ in 0..200 {
            let defect = seg(d) - dv;
            if defect.abs() <= RESIDUAL_REL_TOL * dv.max(1e-300) {
                break;
            }
            if defect > 0.0 {
                hi = d;
            } else {
                lo = d;
            }
            d = 0.5 * (lo + hi);
        }
        ts[i] + d
    }
}

/// Index of the segment containing `t`, assuming `ts[0] <= t < ts[last]`.
fn segment_index(ts: &[f64], t: f64) -> usize {
    debug_assert!(t >= ts[0] && t < ts[ts.len() - 1]);
    match ts.partition_point(|&k| k <= t) {
        0 => 0,
        p => p - 1,
    }
}
