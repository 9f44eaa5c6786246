use std::collections::BTreeMap;

use super::pmf::StateTag;
use super::AnalysisError;
use crate::model::SystemState;

/// Maps states to occupancy cells, and splits sojourn intervals across
/// cells exactly when the cell can change between events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateBinner {
    /// Cells are customer counts.
    ByCount,
    /// Cells are (count, floor(mean elapsed / width) capped at `cap`).
    /// While the state ages, the mean elapsed time grows at unit speed, so
    /// a sojourn interval sweeps consecutive bins.
    ByCountAndMeanElapsed { width: f64, cap: u32 },
}

impl StateBinner {
    pub fn by_count_and_mean(width: f64, cap: u32) -> Result<Self, AnalysisError> {
        if width <= 0.0 || !width.is_finite() {
            return Err(AnalysisError::BadInput("bin width must be positive"));
        }
        Ok(StateBinner::ByCountAndMeanElapsed { width, cap })
    }

    pub fn tag(&self, x: &SystemState) -> StateTag {
        match *self {
            StateBinner::ByCount => StateTag::Count(x.n() as u32),
            StateBinner::ByCountAndMeanElapsed { width, cap } => match x.mean_elapsed() {
                None => StateTag::Count(0),
                Some(mean) => StateTag::CountMean {
                    n: x.n() as u32,
                    bin: ((mean / width).floor() as u32).min(cap),
                },
            },
        }
    }

    /// Credits a sojourn of length `dt` starting at `x` to the cells it
    /// passes through. Counts cannot change during a sojourn; mean-elapsed
    /// bins can, and the crossing times are computed exactly.
    pub fn accumulate(&self, acc: &mut BTreeMap<StateTag, f64>, x: &SystemState, dt: f64) {
        debug_assert!(dt >= 0.0 && dt.is_finite());
        if dt == 0.0 {
            return;
        }
        match *self {
            StateBinner::ByCount => {
                *acc.entry(StateTag::Count(x.n() as u32)).or_insert(0.0) += dt;
            }
            StateBinner::ByCountAndMeanElapsed { width, cap } => {
                let n = x.n() as u32;
                let Some(start) = x.mean_elapsed() else {
                    *acc.entry(StateTag::Count(0)).or_insert(0.0) += dt;
                    return;
                };
                let end = start + dt;
                let mut lo = start;
                let mut bin = ((lo / width).floor() as u32).min(cap);
                while lo < end {
                    let hi = if bin >= cap {
                        end
                    } else {
                        (((bin + 1) as f64) * width).min(end)
                    };
                    if hi > lo {
                        *acc.entry(StateTag::CountMean { n, bin }).or_insert(0.0) += hi - lo;
                        lo = hi;
                    }
                    bin += 1;
                }
            }
        }
    }
}
