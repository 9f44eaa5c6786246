use super::SimError;

/// How the next event is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Service completions are presampled on arrival by inverting the
    /// cumulative hazard; only arrivals are thinned. Fast, and exact for
    /// any service law.
    Agenda,
    /// Arrivals and departures compete through one thinned clock whose
    /// envelope bounds the total event intensity over a short window.
    /// Exercises the hazard pointwise, so it doubles as a cross-check.
    HazardThinning,
}

/// Run-level knobs shared by every driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorConfig {
    pub seed: u64,
    pub horizon: f64,
    pub mode: SimMode,
    /// Observation times, sorted, within `[0, horizon]`.
    pub snapshot_times: Vec<f64>,
    /// Hard cap on applied events per trajectory.
    pub max_events: usize,
}

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

impl SimulatorConfig {
    pub fn new(seed: u64, horizon: f64, mode: SimMode) -> Result<Self, SimError> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(SimError::BadConfig("horizon must be positive and finite"));
        }
        Ok(Self {
            seed,
            horizon,
            mode,
            snapshot_times: Vec::new(),
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Result<Self, SimError> {
        let sorted = times.windows(2).all(|w| w[0] <= w[1]);
        let in_range = times
            .iter()
            .all(|&t| t.is_finite() && t >= 0.0 && t <= self.horizon);
        if !sorted || !in_range {
            return Err(SimError::BadConfig(
                "snapshot times must be sorted and lie within [0, horizon]",
            ));
        }
        self.snapshot_times = times;
        Ok(self)
    }

    pub fn with_max_events(mut self, cap: usize) -> Result<Self, SimError> {
        if cap == 0 {
            return Err(SimError::BadConfig("event cap must be positive"));
        }
        self.max_events = cap;
        Ok(self)
    }
}
