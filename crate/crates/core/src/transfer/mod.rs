//! The transfer operator K, defined by ν(f · g∘T) = ν(K(f) g), in branch-sum
//! and Ulam forms, with decay fits and the summability checkers.

mod analytic;
mod conditions;
mod decay;
mod ulam;

pub use analytic::{AnalyticTransfer, GridKernel, GAUSS_GRID_BRANCHES};
pub use conditions::{
    assess_summability, check_lipschitz_decay, check_rate_conditions, LipschitzDecayReport, SeriesReport, Summability, RateConditionReport,
};
pub use decay::{fit_decay, fit_geometric, DecayReport, GeometricFit, Norm};
pub use ulam::{ulam_density, UlamTransfer};
