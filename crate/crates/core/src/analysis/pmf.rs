use std::collections::BTreeMap;
use std::fmt;

use super::binner::StateBinner;
use super::AnalysisError;
use crate::model::SystemState;

/// Tolerance on `|sum - 1|` for normalized mass functions; loose enough for
/// hundred-thousand-term sums accumulated in double precision.
pub const PMF_SUM_TOL: f64 = 1e-9;

/// Label of a state cell: either the bare customer count, or the count
/// together with a mean-elapsed-time bin. Renders as `3` or `3:1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateTag {
    Count(u32),
    CountMean { n: u32, bin: u32 },
}

impl fmt::Display for StateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateTag::Count(n) => write!(f, "{n}"),
            StateTag::CountMean { n, bin } => write!(f, "{n}:{bin}"),
        }
    }
}

/// Probability mass function on customer counts `0, 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self, AnalysisError> {
        if probs.is_empty() || !probs.iter().all(|p| p.is_finite() && *p >= 0.0) {
            return Err(AnalysisError::BadInput("probabilities must be nonnegative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(AnalysisError::BadInput("probabilities must sum to one"));
        }
        Ok(Self { probs })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self, AnalysisError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(AnalysisError::BadInput("empty sample"));
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mass at count `n`; zero beyond the stored support.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Normalized mass function over [`StateTag`] cells.
#[derive(Debug, Clone, PartialEq)]
pub struct TagPmf {
    weights: BTreeMap<StateTag, f64>,
}

impl TagPmf {
    pub fn new(weights: BTreeMap<StateTag, f64>) -> Result<Self, AnalysisError> {
        if weights.is_empty() || !weights.values().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(AnalysisError::BadInput("weights must be nonnegative"));
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(AnalysisError::BadInput("weights must sum to one"));
        }
        Ok(Self { weights })
    }

    /// Normalizes raw occupation weights (total time or counts per cell).
    pub fn from_occupation(raw: &BTreeMap<StateTag, f64>) -> Result<Self, AnalysisError> {
        let total: f64 = raw.values().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(AnalysisError::BadInput(
                "occupation weights must have positive total",
            ));
        }
        let weights = raw.iter().map(|(&t, &w)| (t, w / total)).collect();
        Self::new(weights)
    }

    pub fn get(&self, tag: StateTag) -> f64 {
        self.weights.get(&tag).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateTag, f64)> + '_ {
        self.weights.iter().map(|(&t, &w)| (t, w))
    }

    /// Marginalizes elapsed-time bins away, leaving the count law.
    pub fn to_count_pmf(&self) -> DiscretePmf {
        let mut probs: Vec<f64> = Vec::new();
        for (&tag, &w) in &self.weights {
            let n = match tag {
                StateTag::Count(n) => n as usize,
                StateTag::CountMean { n, .. } => n as usize,
            };
            if probs.len() <= n {
                probs.resize(n + 1, 0.0);
            }
            probs[n] += w;
        }
        DiscretePmf::new(probs).expect("marginalizing preserves total mass")
    }
}

/// Empirical cell frequencies of a batch of states.
pub fn empirical_pmf(
    states: &[SystemState],
    binner: &StateBinner,
) -> Result<TagPmf, AnalysisError> {
    if states.is_empty() {
        return Err(AnalysisError::BadInput("empty sample"));
    }
    let mut raw: BTreeMap<StateTag, f64> = BTreeMap::new();
    for x in states {
        *raw.entry(binner.tag(x)).or_insert(0.0) += 1.0;
    }
    TagPmf::from_occupation(&raw)
}

/// Total variation distance `sup_A |a(A) - b(A)| = (1/2) sum |a - b|`.
pub fn tv_distance(a: &DiscretePmf, b: &DiscretePmf) -> f64 {
    let len = a.len().max(b.len());
    0.5 * (0..len).map(|n| (a.get(n) - b.get(n)).abs()).sum::<f64>()
}

/// Same metric over tag cells (missing cells carry zero mass).
pub fn tv_distance_tags(a: &TagPmf, b: &TagPmf) -> f64 {
    let mut keys: Vec<StateTag> = a.weights.keys().copied().collect();
    keys.extend(b.weights.keys().copied());
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|&t| (a.get(t) - b.get(t)).abs())
        .sum::<f64>()
}

/// The unhalved convention `sum |a - b|`, twice [`tv_distance`].
pub fn l1_distance(a: &DiscretePmf, b: &DiscretePmf) -> f64 {
    2.0 * tv_distance(a, b)
}
