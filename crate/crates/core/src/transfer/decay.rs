use std::sync::Arc;

use super::AnalyticTransfer;
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::numerics::fit_line;
use crate::systems::Observable;

/// Values below this are treated as floating-point noise in decay fits.
pub const NORM_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Sup,
    L2,
    L4,
}

impl Norm {
    pub fn exponent(self) -> f64 {
        match self {
            Norm::Sup => f64::INFINITY,
            Norm::L2 => 2.0,
            Norm::L4 => 4.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::Sup => "inf",
            Norm::L2 => "2",
            Norm::L4 => "4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inf" | "sup" => Some(Norm::Sup),
            "2" => Some(Norm::L2),
            "4" => Some(Norm::L4),
            _ => None,
        }
    }
}

/// value_n ≈ prefactor · rho^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub rho: f64,
    pub prefactor: f64,
    /// RMS residual of the log-linear regression.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of log(value) against n over the (n, value) pairs with
/// value ≥ `floor`. Needs at least three usable points.
pub fn fit_geometric(values: &[(usize, f64)], floor: f64) -> Option<GeometricFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        values.iter().filter(|(_, v)| *v >= floor && v.is_finite()).map(|(n, v)| (*n as f64, v.ln())).unzip();
    if xs.len() < 3 {
        return None;
    }
    let fit = fit_line(&xs, &ys)?;
    Some(GeometricFit { rho: fit.slope.exp(), prefactor: fit.intercept.exp(), residual: fit.residual, points: xs.len() })
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub norm: Norm,
    /// ‖K^n f − ν(K^n f)‖ for n = 1..=N (index n − 1).
    pub norms: Vec<f64>,
    pub rho_hat: Option<f64>,
    pub prefactor: Option<f64>,
    pub fit_residual: Option<f64>,
    /// All norms vanish (f is constant up to the floor).
    pub degenerate: bool,
    /// max_n |ν(K^n f) − ν(f)|.
    pub mean_drift: f64,
}

impl DecayReport {
    pub fn norm_at(&self, n: usize) -> f64 {
        self.norms[n - 1]
    }

    /// Largest ratio norms[n]/norms[n−1] − 1 over n ≥ 2 among non-negligible
    /// norms; ≤ 0.05 means nonincreasing within 5 %.
    pub fn worst_increase(&self) -> f64 {
        self.norms
            .windows(2)
            .filter(|w| w[0] > NORM_FLOOR * 10.0 && w[1] > NORM_FLOOR * 10.0)
            .map(|w| w[1] / w[0] - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Norms of K^n f − ν(f) for n = 1..=horizon on `grid` and their geometric fit
/// over n ∈ [2, horizon].
pub fn fit_decay(op: &AnalyticTransfer, f: &Observable, norm: Norm, horizon: usize, grid: &Arc<Grid>) -> Result<DecayReport> {
    if horizon < 8 {
        return Err(invalid(format!("decay horizon must be at least 8, got {horizon}")));
    }
    let mean = f.nu_mean(op.map());
    let powers = op.powers(f, horizon, grid)?;
    let mut norms = Vec::with_capacity(horizon);
    let mut drift: f64 = 0.0;
    for g in &powers[1..] {
        // Center at the grid mean of the iterate: the discretized operator
        // has its own fixed constant, and measuring against it keeps the
        // geometric regime visible down to the floor.
        let c = g.nu();
        drift = drift.max((c - mean).abs());
        norms.push(g.deviation_norm(c, norm.exponent()));
    }
    let degenerate = norms.iter().all(|v| *v < NORM_FLOOR);
    let pairs: Vec<(usize, f64)> = norms.iter().enumerate().skip(1).map(|(i, v)| (i + 1, *v)).collect();
    let fit = if degenerate { None } else { fit_geometric(&pairs, NORM_FLOOR) };
    Ok(DecayReport {
        norm,
        norms,
        rho_hat: fit.map(|f| f.rho),
        prefactor: fit.map(|f| f.prefactor),
        fit_residual: fit.map(|f| f.residual),
        degenerate,
        mean_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::IntervalMap;

    #[test]
    fn doubling_rate_is_one_half() {
        let map = IntervalMap::doubling();
        let op = AnalyticTransfer::new(&map);
        let grid = Grid::new(&map, 1 << 12);
        let r = fit_decay(&op, &Observable::identity(), Norm::Sup, 20, &grid).unwrap();
        assert!((r.rho_hat.unwrap() - 0.5).abs() < 0.02);
        assert!(r.worst_increase() <= 0.05);
    }

    #[test]
    fn constant_is_degenerate() {
        let map = IntervalMap::gauss();
        let op = AnalyticTransfer::new(&map).with_grid_branches(16);
        let grid = Grid::new(&map, 256);
        let r = fit_decay(&op, &Observable::constant(2.0), Norm::L2, 10, &grid).unwrap();
        assert!(r.degenerate);
        assert!(r.rho_hat.is_none());
    }

    #[test]
    fn short_horizon_rejected() {
        let map = IntervalMap::doubling();
        let op = AnalyticTransfer::new(&map);
        let grid = Grid::new(&map, 64);
        assert!(fit_decay(&op, &Observable::identity(), Norm::Sup, 7, &grid).is_err());
    }
}
