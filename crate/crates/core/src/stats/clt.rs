use rayon::prelude::*;

use super::ks::{critical_one_sample, critical_two_sample, ks_one_sample, ks_pvalue, ks_two_sample, standard_normal_cdf, two_sample_size};
use crate::chain::sample_path_with;
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::systems::{typical_orbit, IntervalMap, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumSource {
    /// Σ_{i<n} f(T^i x) for ν-typical x.
    ForwardOrbit,
    /// Σ_{i=1}^{n} f(Y_i) along the backward chain.
    BackwardChain,
}

impl SumSource {
    pub fn label(self) -> &'static str {
        match self {
            SumSource::ForwardOrbit => "forward-orbit",
            SumSource::BackwardChain => "backward-chain",
        }
    }

    fn lane(self) -> u64 {
        match self {
            SumSource::ForwardOrbit => 0,
            SumSource::BackwardChain => 1,
        }
    }
}

/// Centered sums of one replica, independent across (seed, index, source).
pub fn centered_sum(source: SumSource, map: &IntervalMap, f: &Observable, nu: f64, n: usize, seed: u64, index: u64) -> Result<f64> {
    let mut r = rng::substream(seed, index, source.lane());
    let xs = match source {
        SumSource::ForwardOrbit => typical_orbit(map, n - 1, &mut r).points,
        SumSource::BackwardChain => {
            let mut states = sample_path_with(map, n, rng::replica_seed(seed, index), &mut r)?.states;
            states.remove(0);
            states
        }
    };
    Ok(xs.iter().map(|x| f.eval(*x) - nu).sum())
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub source: SumSource,
    pub n: usize,
    pub reps: usize,
    pub sigma: f64,
    /// S_n/(σ√n) per replica, in replica order.
    pub normalized: Vec<f64>,
    pub ks: f64,
    pub p_value: f64,
    pub critical: f64,
}

pub fn clt_test(source: SumSource, map: &IntervalMap, f: &Observable, n: usize, reps: usize, sigma: f64, seed: u64) -> Result<CltReport> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Degenerate(format!("sigma = {sigma}")));
    }
    if reps < 1000 {
        return Err(invalid(format!("clt test needs at least 1000 replicas, got {reps}")));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let nu = f.nu_mean(map);
    let scale = sigma * (n as f64).sqrt();
    let normalized = (0..reps)
        .into_par_iter()
        .map(|i| centered_sum(source, map, f, nu, n, seed, i as u64).map(|s| s / scale))
        .collect::<Result<Vec<f64>>>()?;
    let ks = ks_one_sample(&normalized, standard_normal_cdf);
    Ok(CltReport {
        source,
        n,
        reps,
        sigma,
        p_value: ks_pvalue(ks, reps as f64),
        critical: critical_one_sample(reps),
        normalized,
        ks,
    })
}

/// Two-sample KS between the normalized sums of two reports.
#[derive(Debug, Clone, Copy)]
pub struct SumDuality {
    pub ks: f64,
    pub p_value: f64,
    pub critical: f64,
}

pub fn compare_sums(a: &CltReport, b: &CltReport) -> SumDuality {
    let ks = ks_two_sample(&a.normalized, &b.normalized);
    let (n, m) = (a.normalized.len(), b.normalized.len());
    SumDuality { ks, p_value: ks_pvalue(ks, two_sample_size(n, m)), critical: critical_two_sample(n, m) }
}
