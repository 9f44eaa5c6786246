//! Simulation and analysis of an infinite-server queue whose state is the
//! full vector of elapsed service times plus the time since the last
//! arrival. Arrival intensity may depend on the whole state within declared
//! envelopes; service is i.i.d. with a general hazard.
//!
//! Layers:
//! - [`model`]: states, arrival and service laws, energy (Lyapunov)
//!   functions, and the stability conditions with their margins.
//! - [`simulator`]: exact event-driven trajectories (agenda and
//!   hazard-thinning drivers), replica ensembles, hitting times, and
//!   regeneration-cycle estimators, all on keyed random streams.
//! - [`coupling`]: synchronized pairs from different initial states, whose
//!   merge times bound distances to stationarity.
//! - [`analysis`]: occupancy laws, censored survival curves, tail-exponent
//!   fits, distribution tests, and the explicit convergence constants.

pub mod analysis;
pub mod coupling;
mod math;
pub mod model;
pub mod simulator;

pub use analysis::survival::CensoredSample;
pub use model::{ArrivalLaw, LyapunovParams, ServiceLaw, SystemState};
pub use simulator::{SimMode, SimulatorConfig};
