use crate::chain::PhiReport;
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFn};
use crate::systems::{IntervalMap, Observable};
use crate::transfer::AnalyticTransfer;

/// Cells of the grid carrying the conditional expectations.
pub const COVARIANCE_GRID: usize = 1 << 12;
/// Extra lags scanned beyond k for the second bound.
pub const COVARIANCE_GAPS: usize = 8;

/// Both bounds at one lag k.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceBoundRow {
    pub k: usize,
    /// ‖K^k f − ν(f)‖_p.
    pub lhs_first: f64,
    /// 2(2φ₁(k))^{(p−1)/p}‖f‖_p.
    pub rhs_first: f64,
    /// max over k ≤ j ≤ i of ‖E(f(Y_i)⁰g(Y_j)⁰ | Y_0) − E(f(Y_i)⁰g(Y_j)⁰)‖_{p/2}; NaN for p < 2.
    pub lhs_second: f64,
    /// 8(4φ₂(k))^{(p−2)/p}‖f‖_p‖g‖_p.
    pub rhs_second: f64,
}

impl CovarianceBoundRow {
    pub fn first_holds(&self) -> bool {
        self.lhs_first <= self.rhs_first
    }

    pub fn second_holds(&self) -> bool {
        self.lhs_second.is_nan() || self.lhs_second <= self.rhs_second
    }

    /// rhs/lhs; infinite when the left side vanishes.
    pub fn slack_first(&self) -> f64 {
        self.rhs_first / self.lhs_first
    }

    pub fn slack_second(&self) -> f64 {
        self.rhs_second / self.lhs_second
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceBoundReport {
    pub p: f64,
    pub f_name: String,
    pub g_name: String,
    pub rows: Vec<CovarianceBoundRow>,
}

impl CovarianceBoundReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.first_holds() && r.second_holds())
    }

    pub fn violations(&self) -> Vec<&CovarianceBoundRow> {
        self.rows.iter().filter(|r| !(r.first_holds() && r.second_holds())).collect()
    }
}

/// Covariance inequalities driven by the dependence coefficients, for
/// k = 1..=horizon. The left sides are exact conditional expectations on a
/// grid; the right sides use the grid lower bounds of φ, so a reported
/// violation may come from φ being underestimated.
pub fn check_covariance_bounds(
    map: &IntervalMap,
    f: &Observable,
    g: &Observable,
    p: f64,
    horizon: usize,
    phi1: &PhiReport,
    phi2: &PhiReport,
) -> Result<CovarianceBoundReport> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p = {p} below 1")));
    }
    if horizon == 0 || phi1.values.len() < horizon || phi2.values.len() < horizon {
        return Err(invalid("dependence coefficients do not cover the horizon"));
    }
    let op = AnalyticTransfer::new(map);
    let mut jumps: Vec<f64> = f.breaks().iter().chain(g.breaks()).copied().collect();
    jumps.sort_by(f64::total_cmp);
    let grid = Grid::with_jumps(map, COVARIANCE_GRID, &jumps);
    let kernel = op.kernel(&grid);
    let f_pow = op.powers(f, horizon + COVARIANCE_GAPS, &grid)?;
    let nu_f = f.nu_mean(map);
    let nu_g = g.nu_mean(map);
    let norm_f = f.lp_norm(map, p);
    let norm_g = g.lp_norm(map, p);

    let second = if p >= 2.0 {
        let g0 = GridFn::from_observable(&grid, g).map_values(|v| v - nu_g);
        // lhs[j] = max over gaps of the p/2 deviation of K^j(g⁰·(K^gap f − νf))
        let last = horizon + COVARIANCE_GAPS;
        let mut lhs = vec![0.0f64; last + 1];
        for f_gap in &f_pow[..=COVARIANCE_GAPS] {
            let mut h = g0.zip_with(f_gap, |a, b| a * (b - nu_f));
            for (j, slot) in lhs.iter_mut().enumerate() {
                if j > 0 {
                    h = kernel.apply(&h);
                }
                let c = h.nu();
                *slot = slot.max(h.deviation_norm(c, p / 2.0));
            }
        }
        Some(lhs)
    } else {
        None
    };

    let rows = (1..=horizon)
        .map(|k| {
            let fk = &f_pow[k];
            let lhs_first = fk.deviation_norm(nu_f, p);
            let rhs_first = 2.0 * (2.0 * phi1.value(k)).powf((p - 1.0) / p) * norm_f;
            let (lhs_second, rhs_second) = match &second {
                Some(lhs) => (
                    lhs[k..=k + COVARIANCE_GAPS].iter().copied().fold(0.0, f64::max),
                    8.0 * (4.0 * phi2.value(k)).powf((p - 2.0) / p) * norm_f * norm_g,
                ),
                None => (f64::NAN, f64::NAN),
            };
            CovarianceBoundRow { k, lhs_first, rhs_first, lhs_second, rhs_second }
        })
        .collect();
    Ok(CovarianceBoundReport { p, f_name: f.name().to_string(), g_name: g.name().to_string(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::phi_coefficient;

    #[test]
    fn doubling_indicator_bounds_hold() {
        let map = IntervalMap::doubling();
        let f = Observable::indicator_halfline(0.5, 4.0, &map).unwrap();
        let phi1 = phi_coefficient(&map, 1, 6, 256).unwrap();
        let phi2 = phi_coefficient(&map, 2, 6, 256).unwrap();
        let r = check_covariance_bounds(&map, &f, &f, 4.0, 5, &phi1, &phi2).unwrap();
        assert!(r.all_hold(), "{:?}", r.violations());
        // K^k of this indicator is the constant 1/2
        assert!(r.rows[4].lhs_first < 1e-12);
    }

    #[test]
    fn constant_has_zero_left_sides() {
        let map = IntervalMap::doubling();
        let c = Observable::constant(2.0);
        let phi1 = phi_coefficient(&map, 1, 4, 256).unwrap();
        let phi2 = phi_coefficient(&map, 2, 4, 256).unwrap();
        let r = check_covariance_bounds(&map, &c, &c, 3.0, 3, &phi1, &phi2).unwrap();
        assert!(r.rows.iter().all(|row| row.lhs_first < 1e-12 && row.lhs_second < 1e-12));
    }
}
