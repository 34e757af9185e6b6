//! Estimators and verdicts.

pub mod chisq;
pub mod clt;
pub mod covariance;
pub mod ks;
pub mod lil;
pub mod rate;
pub mod series;
pub mod thresholds;
pub mod variance;

pub use chisq::{chi_square, ChiSquare};
pub use clt::{centered_sum, clt_test, compare_sums, CltReport, SumDuality, SumSource};
pub use covariance::{check_covariance_bounds, CovarianceBoundReport, CovarianceBoundRow};
pub use ks::{
    critical_one_sample, critical_two_sample, ks_one_sample, ks_pvalue, ks_two_sample, standard_normal_cdf, two_sample_size,
};
pub use lil::{lil_envelope, LilReport};
pub use rate::{asip_rate, RateFit, RateMode, ReplicaErrors};
pub use series::{reverse_series_check, tail_oscillation, ReverseSeriesReport};
pub use thresholds::Thresholds;
pub use variance::{batch_means, covariances, martingale_variance, sigma2, MartingaleVariance, VarianceEstimate};
