//! φ-dependence coefficients of the backward chain, computed from K acting on
//! indicator functions. Every value is a lower bound of the true coefficient:
//! thresholds, index tuples and the essential sup over Y_0 all run over
//! finite sets.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFn, Interp};
use crate::systems::IntervalMap;
use crate::transfer::{fit_geometric, AnalyticTransfer, GeometricFit, GridKernel};

/// Values below this are treated as resolved to zero by the grid.
pub const PHI_FLOOR: f64 = 1e-12;

const THRESHOLD_SHIFT: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiOptions {
    /// Cells of the operator grid for single thresholds.
    pub resolution: usize,
    pub thresholds: usize,
    /// Cells of the operator grid for threshold pairs.
    pub pair_resolution: usize,
    pub pair_thresholds: usize,
    /// Largest gap i₂ − i₁ scanned.
    pub gap_max: usize,
}

impl Default for PhiOptions {
    fn default() -> Self {
        PhiOptions { resolution: 1 << 14, thresholds: 256, pair_resolution: 1 << 11, pair_thresholds: 16, gap_max: 16 }
    }
}

#[derive(Debug, Clone)]
pub struct PhiReport {
    pub k: usize,
    /// φ_{k,Y}(n) for n = 1..=N, as a running sup over i₁ ≥ n.
    pub values: Vec<f64>,
    /// Value at i₁ = n alone, before the running sup.
    pub raw: Vec<f64>,
    pub fit: Option<GeometricFit>,
    pub options: PhiOptions,
}

impl PhiReport {
    pub fn value(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn rho_fit(&self) -> Option<f64> {
        self.fit.map(|f| f.rho)
    }

    /// Leading n with values above the floor.
    pub fn resolved(&self) -> usize {
        self.values.iter().take_while(|v| **v >= PHI_FLOOR).count()
    }
}

/// Thresholds (t + c)/count with an irrational shift c.
pub fn thresholds(count: usize) -> Vec<f64> {
    (0..count).map(|t| (t as f64 + THRESHOLD_SHIFT) / count as f64).collect()
}

fn indicator(grid: &Arc<Grid>, x: f64) -> GridFn {
    GridFn::sample(grid, Interp::Cell, |y| f64::from(u8::from(y <= x)))
}

fn centered_sup(g: &GridFn) -> f64 {
    g.deviation_norm(g.nu(), f64::INFINITY)
}

fn kernel_for(map: &IntervalMap, cells: usize) -> GridKernel {
    AnalyticTransfer::new(map).kernel(&Grid::new(map, cells))
}

/// max over thresholds of sup_y |K^n 1_{≤x} − ν(1_{≤x})| for n = 1..=len.
fn phi_one_raw(kernel: &GridKernel, count: usize, len: usize) -> Vec<f64> {
    let grid = kernel.grid();
    let mut out = vec![0.0f64; len];
    for x in thresholds(count) {
        let mut g = indicator(grid, x);
        for slot in out.iter_mut() {
            g = kernel.apply(&g);
            *slot = slot.max(centered_sup(&g));
        }
    }
    out
}

/// max over threshold pairs and gaps of
/// sup_y |K^{i₁}[(1_{≤x₁} − F₁)(K^{gap} 1_{≤x₂} − F₂)] − ν(·)| for i₁ = 1..=len.
fn phi_two_raw(kernel: &GridKernel, count: usize, gap_max: usize, len: usize) -> Vec<f64> {
    let grid = kernel.grid();
    let xs = thresholds(count);
    let lefts: Vec<GridFn> = xs
        .iter()
        .map(|x| {
            let g = indicator(grid, *x);
            let c = g.nu();
            g.map_values(|v| v - c)
        })
        .collect();
    let mut out = vec![0.0f64; len];
    for x2 in &xs {
        let mut right = indicator(grid, *x2);
        for gap in 0..=gap_max {
            if gap > 0 {
                right = kernel.apply(&right);
            }
            let c2 = right.nu();
            let steps = len.saturating_sub(gap).max(1).min(len);
            for left in &lefts {
                let mut u = left.zip_with(&right, |a, b| a * (b - c2));
                for slot in out.iter_mut().take(steps) {
                    u = kernel.apply(&u);
                    *slot = slot.max(centered_sup(&u));
                }
            }
        }
    }
    out
}

fn suffix_max(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].max(out[i + 1]);
    }
    out
}

pub fn phi_coefficient(map: &IntervalMap, k: usize, horizon: usize, grid: usize) -> Result<PhiReport> {
    let options = PhiOptions { thresholds: grid, ..PhiOptions::default() };
    phi_coefficient_with(map, k, horizon, options)
}

pub fn phi_coefficient_with(map: &IntervalMap, k: usize, horizon: usize, options: PhiOptions) -> Result<PhiReport> {
    if !(k == 1 || k == 2) {
        return Err(invalid(format!("phi order must be 1 or 2, got {k}")));
    }
    if options.thresholds < 256 {
        return Err(invalid(format!("phi needs at least 256 thresholds, got {}", options.thresholds)));
    }
    if horizon == 0 {
        return Err(invalid("phi horizon must be positive"));
    }
    let len = horizon + options.gap_max;
    let mut raw = phi_one_raw(&kernel_for(map, options.resolution), options.thresholds, len);
    if k == 2 {
        let kernel = kernel_for(map, options.pair_resolution);
        let two = phi_two_raw(&kernel, options.pair_thresholds, options.gap_max, len);
        for (r, t) in raw.iter_mut().zip(two) {
            *r = r.max(t);
        }
    }
    let mut values = suffix_max(&raw);
    values.truncate(horizon);
    raw.truncate(horizon);
    let resolved: Vec<(usize, f64)> =
        values.iter().enumerate().take_while(|(_, v)| **v >= PHI_FLOOR).map(|(i, v)| (i + 1, *v)).collect();
    let fit = fit_geometric(&resolved, PHI_FLOOR);
    Ok(PhiReport { k, values, raw, fit, options })
}

/// Partial sums of the dependence series: Σ k^{1/√3 − 1/2} φ₂(k)^{1/2} when
/// p < 4, Σ (log k)³ k^{2/√3} φ₂(k) when p = 4.
#[derive(Debug, Clone)]
pub struct DependenceSeries {
    pub p: f64,
    pub summands: Vec<f64>,
    pub partial: Vec<f64>,
    /// Terms taken from computed values; later terms use the fitted law.
    pub measured: usize,
    pub last_increment: f64,
    pub total: f64,
}

impl DependenceSeries {
    pub fn stabilized(&self, relative: f64) -> bool {
        self.total.is_finite() && self.last_increment <= relative * self.total
    }
}

pub fn dependence_series(report: &PhiReport, p: f64, extend_to: usize) -> DependenceSeries {
    let root3 = 3f64.sqrt();
    let term = |k: usize, phi: f64| {
        let kf = k as f64;
        if p < 4.0 {
            kf.powf(1.0 / root3 - 0.5) * phi.max(0.0).sqrt()
        } else {
            kf.ln().powi(3) * kf.powf(2.0 / root3) * phi.max(0.0)
        }
    };
    let measured = report.resolved();
    let last = extend_to.max(report.values.len());
    let mut summands = Vec::with_capacity(last);
    for k in 1..=last {
        let phi = if k <= measured {
            report.value(k)
        } else {
            match report.fit {
                Some(f) if f.rho < 1.0 => f.prefactor * f.rho.powi(k as i32),
                _ if measured == report.values.len() && k > measured => f64::INFINITY,
                _ => 0.0,
            }
        };
        summands.push(term(k, phi));
    }
    let mut acc = 0.0;
    let partial: Vec<f64> = summands
        .iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect();
    DependenceSeries {
        p,
        last_increment: summands.last().copied().unwrap_or(0.0),
        total: acc,
        summands,
        partial,
        measured,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Y_n given Y_0 = y is (y + J)/2ⁿ with J uniform on {0, …, 2ⁿ − 1}.
    fn doubling_oracle(x: f64, y: f64, n: i32) -> f64 {
        let m = 2f64.powi(n);
        let count = ((m * x - y).floor() + 1.0).clamp(0.0, m);
        (count / m - x).abs()
    }

    #[test]
    fn doubling_phi_one_matches_backward_law() {
        let map = IntervalMap::doubling();
        let opts = PhiOptions { resolution: 1 << 10, thresholds: 256, gap_max: 0, ..PhiOptions::default() };
        let r = phi_coefficient_with(&map, 1, 8, opts).unwrap();
        let cells = 1usize << 10;
        for n in 1..=8 {
            let mut want: f64 = 0.0;
            for x in thresholds(256) {
                // the grid indicator switches at the last midpoint ≤ x
                let snapped = ((x * cells as f64 - 0.5).floor() + 1.0) / cells as f64;
                for i in 0..cells {
                    let y = (i as f64 + 0.5) / cells as f64;
                    want = want.max(doubling_oracle(snapped, y, n));
                }
            }
            assert!((r.raw[n as usize - 1] - want).abs() < 1e-12, "n={n}");
            assert!(r.value(n as usize) <= 2f64.powi(-n) + 1e-12);
        }
    }

    #[test]
    fn doubling_phi_two_rate() {
        let map = IntervalMap::doubling();
        let opts = PhiOptions { resolution: 1 << 12, pair_resolution: 1 << 9, pair_thresholds: 8, gap_max: 4, ..PhiOptions::default() };
        let r = phi_coefficient_with(&map, 2, 7, opts).unwrap();
        assert!((r.rho_fit().unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn series_extends_geometrically() {
        let values: Vec<f64> = (1..=10).map(|n| 0.5f64.powi(n)).collect();
        let fit = fit_geometric(&values.iter().enumerate().map(|(i, v)| (i + 1, *v)).collect::<Vec<_>>(), 0.0);
        let report = PhiReport { k: 2, raw: values.clone(), values, fit, options: PhiOptions::default() };
        let s = dependence_series(&report, 3.0, 200);
        assert_eq!(s.measured, 10);
        assert!(s.stabilized(1e-6));
    }
}
