use crate::error::{invalid, Result};
use rayon::prelude::*;

use crate::grid::Grid;
use crate::martingale::{MFunction, ReverseMds};
use crate::numerics::{mean, variance};
use crate::rng;
use crate::systems::{graded_integral, typical_orbit, IntervalMap, Observable};
use crate::transfer::{fit_geometric, AnalyticTransfer};

/// Grid used for operator powers in the covariance series.
pub const SERIES_GRID: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    /// ν((f − νf)²) + 2 Σ_{k=1}^{K} ν((f − νf) f∘T^k).
    pub sigma2_series: f64,
    pub k_used: usize,
    /// Geometric bound on the dropped covariances.
    pub tail_bound: f64,
    /// Covariances for k = 0..=K.
    pub covariances: Vec<f64>,
    /// Batch means over one orbit with ⌊√n⌋ batches; `None` when n = 0.
    pub sigma2_batch: Option<f64>,
    pub n_used: usize,
    pub batches: usize,
    pub degenerate: bool,
    /// Series below −tail_bound: truncation too short.
    pub inconsistent: bool,
}

impl VarianceEstimate {
    /// |series − batch| / series.
    pub fn discrepancy(&self) -> Option<f64> {
        self.sigma2_batch.map(|b| (self.sigma2_series - b).abs() / self.sigma2_series.abs())
    }
}

/// ν((f − νf)·f∘T^k) = ν(K^k(f − νf)·f) for k = 0..=lags.
pub fn covariances(map: &IntervalMap, f: &Observable, lags: usize) -> Result<Vec<f64>> {
    let op = AnalyticTransfer::new(map);
    let grid = Grid::new(map, SERIES_GRID);
    let powers = op.powers(f, lags, &grid)?;
    let nu = f.nu_mean(map);
    let quad = map.quadrature(f.breaks());
    let integrate = |g: &dyn Fn(f64) -> f64| {
        if f.is_singular() {
            graded_integral(map, g)
        } else {
            quad.integrate(g)
        }
    };
    let mut out = Vec::with_capacity(lags + 1);
    out.push(integrate(&|x| {
        let d = f.eval(x) - nu;
        d * d
    }));
    for g in &powers[1..] {
        // center at the iterate's own grid mean; see the decay norms
        let c = g.nu();
        out.push(integrate(&|x| (g.eval(x) - c) * (f.eval(x) - nu)));
    }
    Ok(out)
}

/// Batch-means estimate of σ² from the centered values of one orbit.
pub fn batch_means(values: &[f64]) -> (f64, usize) {
    let n = values.len();
    let b = (n as f64).sqrt().floor() as usize;
    let size = n / b;
    let means: Vec<f64> = values.chunks_exact(size).take(b).map(mean).collect();
    (size as f64 * variance(&means), b)
}

pub fn sigma2(map: &IntervalMap, f: &Observable, lags: usize, n: usize, seed: u64) -> Result<VarianceEstimate> {
    if lags == 0 {
        return Err(invalid("covariance series needs at least one lag"));
    }
    if n != 0 && n < 16 {
        return Err(invalid(format!("orbit length {n} too short for batch means")));
    }
    let cov = covariances(map, f, lags)?;
    let series = cov[0] + 2.0 * cov[1..].iter().sum::<f64>();
    let tail: Vec<(usize, f64)> = cov.iter().enumerate().skip(1 + lags / 2).map(|(k, c)| (k, c.abs())).collect();
    let tail_bound = match fit_geometric(&tail, 1e-15) {
        Some(fit) if fit.rho < 1.0 => 2.0 * fit.prefactor * fit.rho.powi(lags as i32 + 1) / (1.0 - fit.rho),
        Some(_) => f64::INFINITY,
        None => 0.0,
    };
    let degenerate = cov[0] < 1e-14 || series.abs() <= tail_bound.max(1e-14);
    let inconsistent = series < -tail_bound;
    let (batch, batches) = if n == 0 {
        (None, 0)
    } else {
        let mut rng = rng::from_seed(seed);
        let orbit = typical_orbit(map, n - 1, &mut rng);
        let nu = f.nu_mean(map);
        let values: Vec<f64> = orbit.points.iter().map(|x| f.eval(*x) - nu).collect();
        let (b, count) = batch_means(&values);
        (Some(b), count)
    };
    Ok(VarianceEstimate {
        sigma2_series: series,
        k_used: lags,
        tail_bound,
        covariances: cov,
        sigma2_batch: batch,
        n_used: n,
        batches,
        degenerate,
        inconsistent,
    })
}

/// Var(M*_n)/n from replicas of the reverse martingale, pooled over blocks.
#[derive(Debug, Clone)]
pub struct MartingaleVariance {
    pub n: usize,
    pub reps: usize,
    pub blocks: usize,
    /// Σ over replicas and blocks of (block sum)², divided by reps·n.
    pub estimate: f64,
    /// Var(M*_n)/n from the full sums alone.
    pub full_sum_estimate: f64,
}

/// The increments are centered, so block sums are squared without
/// subtracting a sample mean.
pub fn martingale_variance(map: &IntervalMap, f: &Observable, n: usize, reps: usize, blocks: usize, seed: u64) -> Result<MartingaleVariance> {
    if blocks == 0 || n < blocks || !n.is_multiple_of(blocks) {
        return Err(invalid(format!("{n} increments do not split into {blocks} blocks")));
    }
    if reps == 0 {
        return Err(invalid("at least one replica"));
    }
    let mfun = std::sync::Arc::new(MFunction::new(map, f)?);
    let per_rep = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::replica(seed, i as u64);
            let mds = ReverseMds::sample(mfun.clone(), n + 1, &mut r)?;
            let sums: Vec<f64> = mds.increments.chunks_exact(n / blocks).map(|c| c.iter().sum()).collect();
            Ok((sums.iter().map(|s| s * s).sum::<f64>(), sums.iter().sum::<f64>()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let nf = n as f64;
    let estimate = per_rep.iter().map(|(sq, _)| sq).sum::<f64>() / (reps as f64 * nf);
    let full_sum_estimate = per_rep.iter().map(|(_, s)| s * s).sum::<f64>() / (reps as f64 * nf);
    Ok(MartingaleVariance { n, reps, blocks, estimate, full_sum_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_identity_covariances() {
        let map = IntervalMap::doubling();
        let c = covariances(&map, &Observable::identity(), 12).unwrap();
        for (k, v) in c.iter().enumerate() {
            assert!((v - 2f64.powi(-(k as i32)) / 12.0).abs() < 1e-9, "k={k} {v}");
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let map = IntervalMap::doubling();
        let v = sigma2(&map, &Observable::constant(1.0), 5, 0, 1).unwrap();
        assert!(v.degenerate);
        assert!(v.sigma2_batch.is_none());
    }

    #[test]
    fn doubling_martingale_variance_is_exact() {
        // increments are ±1/2, so every block sum has variance size/4
        let map = IntervalMap::doubling();
        let v = martingale_variance(&map, &Observable::identity(), 1024, 20, 16, 5).unwrap();
        assert!((v.estimate - 0.25).abs() < 0.025, "{}", v.estimate);
    }

    #[test]
    fn batch_means_of_iid() {
        let mut r = rng::from_seed(3);
        use rand::Rng as _;
        let xs: Vec<f64> = (0..40_000).map(|_| r.random::<f64>() - 0.5).collect();
        let (b, count) = batch_means(&xs);
        assert_eq!(count, 200);
        assert!((b - 1.0 / 12.0).abs() < 0.2 / 12.0);
    }
}
