use serde::{Deserialize, Serialize};

/// Every verdict threshold used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Relative tolerance of the covariance-series σ².
    pub sigma2_series_rel: f64,
    /// Relative tolerance of the batch-means σ².
    pub sigma2_batch_rel: f64,
    /// Relative tolerance between the two σ² estimators.
    pub sigma2_agreement_rel: f64,
    /// Significance level of KS and χ² tests.
    pub alpha: f64,
    pub clt_ks: f64,
    pub duality_sum_ks: f64,
    pub lil_checkpoint: f64,
    pub lil_final_octave: f64,
    pub rate_slope: f64,
    /// Added to 1/p for block-mode rate fits.
    pub rate_slack: f64,
    pub clock_rel: f64,
    pub variance_match_rel: f64,
    /// Autocorrelation bound in units of 1/√N.
    pub autocorr_scale: f64,
    pub transfer_duality_abs: f64,
    pub series_stabilization_rel: f64,
    pub phi_rho_tol: f64,
    pub phi_abs: f64,
    pub hanson_russo_lo: f64,
    pub hanson_russo_hi: f64,
    pub centering_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            sigma2_series_rel: 0.02,
            sigma2_batch_rel: 0.05,
            sigma2_agreement_rel: 0.05,
            alpha: 0.01,
            clt_ks: 0.05,
            duality_sum_ks: 0.03,
            lil_checkpoint: 1.3,
            lil_final_octave: 1.1,
            rate_slope: 0.35,
            rate_slack: 0.1,
            clock_rel: 0.02,
            variance_match_rel: 0.03,
            autocorr_scale: 3.0,
            transfer_duality_abs: 1e-6,
            series_stabilization_rel: 1e-6,
            phi_rho_tol: 0.05,
            phi_abs: 1e-6,
            hanson_russo_lo: 0.5,
            hanson_russo_hi: 1.5,
            centering_factor: 10.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_block_keeps_defaults() {
        let t: Thresholds = serde_json::from_str(r#"{"rate_slope": 0.4}"#).unwrap();
        assert_eq!(t.rate_slope, 0.4);
        assert_eq!(t.lil_checkpoint, 1.3);
        assert!(serde_json::from_str::<Thresholds>(r#"{"bogus": 1}"#).is_err());
    }
}
