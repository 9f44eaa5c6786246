use super::AnalysisError;

/// One observation of a nonnegative time, possibly right-censored (the
/// event had not happened when observation stopped at `value`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoredSample {
    pub value: f64,
    pub censored: bool,
}

impl CensoredSample {
    pub fn observed(value: f64) -> Self {
        Self {
            value,
            censored: false,
        }
    }

    pub fn censored_at(value: f64) -> Self {
        Self {
            value,
            censored: true,
        }
    }
}

/// Product-limit survival estimate: a right-continuous step function that
/// drops at each observed event time, with Greenwood standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    survival: Vec<f64>,
    stderr: Vec<f64>,
    n: usize,
}

impl SurvivalCurve {
    /// Event times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Survival just after each event time.
    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// `S(t)`, right-continuous; 1 before the first event.
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&u| u <= t) {
            0 => 1.0,
            i => self.survival[i - 1],
        }
    }

    pub fn stderr_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&u| u <= t) {
            0 => 0.0,
            i => self.stderr[i - 1],
        }
    }
}

/// Kaplan-Meier estimate from censored samples.
pub fn kaplan_meier(samples: &[CensoredSample]) -> Result<SurvivalCurve, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::BadInput("empty sample"));
    }
    if samples
        .iter()
        .any(|s| !s.value.is_finite() || s.value < 0.0)
    {
        return Err(AnalysisError::BadInput(
            "times must be finite and nonnegative",
        ));
    }
    if samples.iter().all(|s| s.censored) {
        return Err(AnalysisError::AllCensored);
    }
    let mut sorted: Vec<&CensoredSample> = samples.iter().collect();
    // censored observations at a tied time stay at risk through the event
    sorted.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then(a.censored.cmp(&b.censored))
    });

    let n = samples.len();
    let mut at_risk = n as f64;
    let mut s = 1.0;
    let mut greenwood = 0.0;
    let mut times = Vec::new();
    let mut survival = Vec::new();
    let mut stderr = Vec::new();

    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].value;
        let mut deaths = 0.0;
        let mut removed = 0.0;
        while i < sorted.len() && sorted[i].value == t {
            if !sorted[i].censored {
                deaths += 1.0;
            }
            removed += 1.0;
            i += 1;
        }
        if deaths > 0.0 {
            s *= 1.0 - deaths / at_risk;
            if at_risk > deaths {
                greenwood += deaths / (at_risk * (at_risk - deaths));
            }
            times.push(t);
            survival.push(s);
            stderr.push(s * greenwood.sqrt());
        }
        at_risk -= removed;
    }
    Ok(SurvivalCurve {
        times,
        survival,
        stderr,
        n,
    })
}

/// Power-law fit of a survival tail: least squares of `ln S` against
/// `ln(1 + t)` over a time window, so `S(t) ~ (1 + t)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Slope of the fit; negative for a decaying tail.
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
    pub window: (f64, f64),
}

const TAIL_FIT_MIN_POINTS: usize = 20;

/// Fits the tail exponent over `window`, or over a default window: the
/// last factor-of-ten span of `1 + t` that stays above the noise floor
/// `50 / n`, where the curve is still well resolved.
pub fn tail_exponent_fit(
    curve: &SurvivalCurve,
    window: Option<(f64, f64)>,
) -> Result<TailFit, AnalysisError> {
    let floor = 50.0 / curve.n as f64;
    let (lo, hi) = match window {
        Some(w) => {
            if !(w.0 >= 0.0 && w.1 > w.0) {
                return Err(AnalysisError::BadInput("fit window must be ordered"));
            }
            w
        }
        None => {
            let hi = curve
                .times
                .iter()
                .zip(&curve.survival)
                .rev()
                .find(|(_, &s)| s >= floor)
                .map(|(&t, _)| t)
                .ok_or(AnalysisError::BadInput(
                    "survival never clears the noise floor",
                ))?;
            ((1.0 + hi) / 10.0 - 1.0, hi)
        }
    };

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &s) in curve.times.iter().zip(&curve.survival) {
        if t >= lo && t <= hi && s > 0.0 {
            xs.push((1.0 + t).ln());
            ys.push(s.ln());
        }
    }
    if xs.len() < TAIL_FIT_MIN_POINTS {
        return Err(AnalysisError::InsufficientData {
            needed: TAIL_FIT_MIN_POINTS,
            got: xs.len(),
        });
    }
    let (slope, r2) = least_squares(&xs, &ys);
    Ok(TailFit {
        exponent: slope,
        r_squared: r2,
        points: xs.len(),
        window: (lo.max(0.0), hi),
    })
}

/// Compares a power-law and an exponential description of the same tail
/// window; flags the tail as exponential when that fit explains the data
/// distinctly better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailShape {
    pub power_r_squared: f64,
    pub exponential_r_squared: f64,
    pub looks_exponential: bool,
}

pub fn tail_shape(
    curve: &SurvivalCurve,
    window: Option<(f64, f64)>,
) -> Result<TailShape, AnalysisError> {
    let fit = tail_exponent_fit(curve, window)?;
    let (lo, hi) = fit.window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &s) in curve.times.iter().zip(&curve.survival) {
        if t >= lo && t <= hi && s > 0.0 {
            xs.push(t);
            ys.push(s.ln());
        }
    }
    let (_, exp_r2) = least_squares(&xs, &ys);
    Ok(TailShape {
        power_r_squared: fit.r_squared,
        exponential_r_squared: exp_r2,
        looks_exponential: exp_r2 > fit.r_squared + 0.01,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, r2)
}
