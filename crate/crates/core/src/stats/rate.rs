use std::sync::Arc;

use rayon::prelude::*;

use crate::coupling::{couple, BrownianGrid};
use crate::error::{invalid, Result};
use crate::martingale::{block_mfunctions, build_blocks, level_of, MFunction, MFunctionOptions, ReverseMds};
use crate::numerics::{fit_line, median};
use crate::rng;
use crate::systems::{typical_orbit, IntervalMap, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// One stationary martingale difference sequence.
    Stationary,
    /// Dyadic blocks of truncated observables.
    Blocks,
}

impl RateMode {
    pub fn default_for(f: &Observable) -> Self {
        if f.is_bounded() {
            RateMode::Stationary
        } else {
            RateMode::Blocks
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RateMode::Stationary => "stationary",
            RateMode::Blocks => "blocks",
        }
    }
}

/// Sup errors of one replica at each requested size.
#[derive(Debug, Clone)]
pub struct ReplicaErrors {
    /// sup_{k≤n} |S_k − Σ_{i≤k} Z_i|.
    pub coupled: Vec<f64>,
    /// sup_{k≤n} |S_k − M*_k|.
    pub residual: Vec<f64>,
    /// sup_{k≤n} |S_k|.
    pub partial: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RateFit {
    pub mode: RateMode,
    pub p: f64,
    pub reps: usize,
    pub ns: Vec<usize>,
    /// Median over replicas of the coupled sup error.
    pub sup_errors: Vec<f64>,
    pub exponent: f64,
    pub envelope_target: f64,
    /// sup_errors / √(n log log n).
    pub normalized: Vec<f64>,
    pub residuals: Vec<f64>,
    pub partial_sups: Vec<f64>,
    pub partial_exponent: f64,
    pub replicas: Vec<ReplicaErrors>,
}

impl RateFit {
    /// Normalized error at the last size below the one at `from`.
    pub fn normalized_decreases(&self, from: usize) -> Option<bool> {
        let i = self.ns.iter().position(|n| *n == from)?;
        Some(self.normalized.last()? < &self.normalized[i])
    }
}

fn slope(ns: &[usize], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    fit_line(&xs, &ls).map(|f| f.slope).unwrap_or(f64::NAN)
}

/// Shared immutable inputs of a rate experiment.
struct RateSetup {
    map: IntervalMap,
    nu: f64,
    f: Observable,
    mfuns: Vec<Arc<MFunction>>,
    /// Variance of the untruncated martingale increment.
    sigma2: f64,
}

fn sup_upto(values: &[f64], ns: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ns.len());
    let mut sup = 0.0f64;
    let mut next = 0;
    for (i, v) in values.iter().enumerate() {
        sup = sup.max(v.abs());
        while next < ns.len() && ns[next] == i + 1 {
            out.push(sup);
            next += 1;
        }
    }
    out
}

fn replica(setup: &RateSetup, horizon: usize, ns: &[usize], seed: u64, index: u64) -> Result<ReplicaErrors> {
    let mut r = rng::substream(seed, index, 0);
    let orbit = typical_orbit(&setup.map, horizon, &mut r);
    let s: Vec<f64> = orbit
        .points
        .iter()
        .take(horizon)
        .scan(0.0, |acc, x| {
            *acc += setup.f.eval(*x) - setup.nu;
            Some(*acc)
        })
        .collect();
    let mds = ReverseMds::blocked(setup.mfuns.clone(), orbit)?;
    let mut bg = BrownianGrid::with_rng(rng::substream(seed, index, 1), 1.0);
    let trace = couple(&mds, &mut bg)?;
    let mut g = 0.0;
    let mut coupled = Vec::with_capacity(horizon);
    let mut residual = Vec::with_capacity(horizon);
    for (k, &sk) in s.iter().enumerate().take(horizon) {
        let v = trace.var_targets[k];
        let scale = if v > 0.0 && setup.mfuns.len() > 1 { (setup.sigma2 / v).sqrt() } else { 1.0 };
        g += trace.gaussian[k] * scale;
        coupled.push(sk - g);
        residual.push(sk - trace.partial_sums[k]);
    }
    Ok(ReplicaErrors { coupled: sup_upto(&coupled, ns), residual: sup_upto(&residual, ns), partial: sup_upto(&s, ns) })
}

/// Coupled sup errors at the sizes `ns` (strictly increasing, at least 3).
/// Each replica couples one orbit of length max(ns) and is read at every
/// prefix.
pub fn asip_rate(map: &IntervalMap, f: &Observable, p: f64, ns: &[usize], reps: usize, mode: RateMode, seed: u64) -> Result<RateFit> {
    if ns.len() < 3 {
        return Err(invalid(format!("rate fit needs at least 3 sizes, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] < 2 {
        return Err(invalid("sizes must be strictly increasing and at least 2"));
    }
    if !(p > 2.0 && p <= 4.0) {
        return Err(invalid(format!("p = {p} outside (2, 4]")));
    }
    if reps == 0 {
        return Err(invalid("at least one replica"));
    }
    let horizon = *ns.last().unwrap();
    let full = Arc::new(MFunction::new(map, f)?);
    let mfuns = match mode {
        RateMode::Stationary => vec![full.clone()],
        RateMode::Blocks => {
            let scheme = build_blocks(f, p, level_of(horizon))?;
            block_mfunctions(map, &scheme, MFunctionOptions::default())?
        }
    };
    let setup = RateSetup { map: map.clone(), nu: f.nu_mean(map), f: f.clone(), sigma2: full.increment_variance(), mfuns };
    let replicas = (0..reps)
        .into_par_iter()
        .map(|i| replica(&setup, horizon, ns, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let med = |pick: &dyn Fn(&ReplicaErrors) -> f64| median(&replicas.iter().map(pick).collect::<Vec<_>>());
    let sup_errors: Vec<f64> = (0..ns.len()).map(|i| med(&|r| r.coupled[i])).collect();
    let residuals: Vec<f64> = (0..ns.len()).map(|i| med(&|r| r.residual[i])).collect();
    let partial_sups: Vec<f64> = (0..ns.len()).map(|i| med(&|r| r.partial[i])).collect();
    let normalized = ns
        .iter()
        .zip(&sup_errors)
        .map(|(n, e)| {
            let nf = *n as f64;
            e / (nf * nf.ln().ln().max(1.0)).sqrt()
        })
        .collect();
    Ok(RateFit {
        mode,
        p,
        reps,
        exponent: slope(ns, &sup_errors),
        partial_exponent: slope(ns, &partial_sups),
        ns: ns.to_vec(),
        sup_errors,
        envelope_target: 1.0 / p,
        normalized,
        residuals,
        partial_sups,
        replicas,
    })
}
