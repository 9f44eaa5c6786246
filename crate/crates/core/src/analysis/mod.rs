//! Estimators and closed forms used to interrogate simulation output:
//! state binning, empirical and exact occupancy laws, censored survival
//! estimation, distribution tests, and the explicit constants entering the
//! convergence-rate bounds.

pub mod binner;
pub mod closed_form;
pub mod constants;
pub mod pmf;
pub mod stats;
pub mod survival;

pub use binner::StateBinner;
pub use closed_form::{
    birth_death_stationary, equilibrium_elapsed_cdf, equilibrium_elapsed_density, fortet_density,
};
pub use constants::{convergence_constants, ConvergenceConstants};
pub use pmf::{
    empirical_pmf, l1_distance, tv_distance, tv_distance_tags, DiscretePmf, StateTag, TagPmf,
};
pub use stats::{
    ks_critical, ks_statistic, ks_two_sample, ks_two_sample_critical, moment_estimate,
    MomentEstimate,
};
pub use survival::{
    kaplan_meier, tail_exponent_fit, tail_shape, CensoredSample, SurvivalCurve, TailFit, TailShape,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    BadInput(&'static str),
    #[error("series did not converge within {0} terms")]
    NonConvergent(usize),
    #[error("load {rho} is too high for a normalizable occupancy law")]
    Unstable { rho: f64 },
    #[error("every sample is censored")]
    AllCensored,
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("constant undefined for these parameters: {0}")]
    UndefinedConstant(&'static str),
}
