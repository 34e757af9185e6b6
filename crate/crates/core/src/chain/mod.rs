//! The backward Markov chain with kernel K: path sampling, the reverse-time
//! duality with forward orbits, and φ-dependence coefficients.

pub mod duality;
pub mod path;
pub mod phi;

pub use duality::{duality_samples, duality_test, DualityEntry, DualityReport, DualitySamples};
pub use path::{sample_path, sample_path_with, ChainPath, StepDefect};
pub use phi::{dependence_series, phi_coefficient, phi_coefficient_with, thresholds, DependenceSeries, PhiOptions, PhiReport, PHI_FLOOR};
