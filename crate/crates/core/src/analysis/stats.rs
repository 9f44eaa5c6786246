use super::survival::CensoredSample;
use super::AnalysisError;

/// One-sample Kolmogorov-Smirnov statistic `sup_t |F_n(t) - F(t)|` against
/// a reference cdf.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, AnalysisError> {
    if sample.is_empty() {
        return Err(AnalysisError::BadInput("empty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_t |F_n(t) - G_m(t)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::BadInput("empty sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

fn ks_coefficient(alpha: f64) -> f64 {
    // asymptotic two-sided quantile: P(D > c/sqrt(n)) ~ alpha
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic one-sample rejection threshold at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Asymptotic two-sample rejection threshold at level `alpha`.
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    ks_coefficient(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Sample moment of order `power`, censoring-aware only in bookkeeping:
/// censored values enter at their observation time, which biases the
/// moment low, so the estimate is flagged once censoring is material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
    pub unreliable: bool,
}

const CENSORING_RELIABLE_FRACTION: f64 = 0.05;

pub fn moment_estimate(
    samples: &[CensoredSample],
    power: f64,
) -> Result<MomentEstimate, AnalysisError> {
    if samples.is_empty() {
        return Err(AnalysisError::BadInput("empty sample"));
    }
    let n = samples.len() as f64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut censored = 0usize;
    for s in samples {
        let v = s.value.powf(power);
        sum += v;
        sumsq += v * v;
        if s.censored {
            censored += 1;
        }
    }
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let censored_fraction = censored as f64 / n;
    Ok(MomentEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        censored_fraction,
        unreliable: censored_fraction > CENSORING_RELIABLE_FRACTION,
    })
}
