use thiserror::Error;

/// Instantaneous configuration of the queue.
///
/// `x0` is the time since the last arrival; `elapsed` holds one entry per
/// customer in service, the time that customer has already been served.
/// Customers are exchangeable: slot positions exist only so events can
/// address them, and nothing downstream may depend on their order.
///
/// All operations are pure: they return a fresh state and never mutate the
/// receiver, so states can be shared freely across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    x0: f64,
    elapsed: Vec<f64>,
}

/// Precondition failures of state operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("time increment must be finite and nonnegative")]
    BadIncrement,
    #[error("state coordinates must be finite and nonnegative")]
    BadCoordinate,
    #[error("arrival slot {slot} out of range 1..={max}")]
    SlotOutOfRange { slot: usize, max: usize },
    #[error("departure index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("operation requires at least one customer in service")]
    Idle,
}

impl SystemState {
    /// A state with the given clocks. Every coordinate must be finite and
    /// nonnegative.
    pub fn new(x0: f64, elapsed: Vec<f64>) -> Result<Self, StateError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(x0) || !elapsed.iter().all(|&s| ok(s)) {
            return Err(StateError::BadCoordinate);
        }
        Ok(Self { x0, elapsed })
    }

    /// The idle state (no customers) with arrival clock `x0`.
    pub fn idle(x0: f64) -> Self {
        Self::new(x0, Vec::new()).expect("idle state requires finite nonnegative x0")
    }

    /// The regeneration point: one just-arrived customer, `(x0, elapsed) = (0, [0])`.
    pub fn regeneration() -> Self {
        Self {
            x0: 0.0,
            elapsed: vec![0.0],
        }
    }

    /// Number of customers in service.
    pub fn n(&self) -> usize {
        self.elapsed.len()
    }

    /// Time since the last arrival.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Elapsed service times, one per customer.
    pub fn elapsed(&self) -> &[f64] {
        &self.elapsed
    }

    /// True when no customer is in service.
    pub fn is_idle(&self) -> bool {
        self.elapsed.is_empty()
    }

    /// Mean elapsed service time, `None` when idle.
    pub fn mean_elapsed(&self) -> Option<f64> {
        if self.elapsed.is_empty() {
            None
        } else {
            Some(self.elapsed.iter().sum::<f64>() / self.elapsed.len() as f64)
        }
    }

    /// Let every clock run for `dt` time units with no event.
    pub fn advance(&self, dt: f64) -> Result<Self, StateError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(StateError::BadIncrement);
        }
        Ok(Self {
            x0: self.x0 + dt,
            elapsed: self.elapsed.iter().map(|s| s + dt).collect(),
        })
    }

    /// Admit a fresh customer into `slot` (1-based, up to n+1). The new
    /// customer starts with zero elapsed time and the arrival clock resets.
    pub fn apply_arrival(&self, slot: usize) -> Result<Self, StateError> {
        let max = self.elapsed.len() + 1;
        if slot == 0 || slot > max {
            return Err(StateError::SlotOutOfRange { slot, max });
        }
        let mut elapsed = self.elapsed.clone();
        elapsed.insert(slot - 1, 0.0);
        Ok(Self { x0: 0.0, elapsed })
    }

    /// Remove the customer in position `index` (1-based). The arrival clock
    /// keeps running: departures do not touch it.
    pub fn apply_departure(&self, index: usize) -> Result<Self, StateError> {
        let n = self.elapsed.len();
        if n == 0 {
            return Err(StateError::Idle);
        }
        if index == 0 || index > n {
            return Err(StateError::IndexOutOfRange { index, n });
        }
        let mut elapsed = self.elapsed.clone();
        elapsed.remove(index - 1);
        Ok(Self {
            x0: self.x0,
            elapsed,
        })
    }
}

impl std::fmt::Display for SystemState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n={}, x0={}", self.elapsed.len(), self.x0)?;
        if !self.elapsed.is_empty() {
            write!(f, ", elapsed=[")?;
            for (i, s) in self.elapsed.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "]")?;
        }
        write!(f, ")")
    }
}
