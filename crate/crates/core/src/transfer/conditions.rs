//! Numerical summability checks for the rate conditions on K.

use std::sync::Arc;

use super::decay::{fit_geometric, GeometricFit, NORM_FLOOR};
use super::AnalyticTransfer;
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFn, Interp};
use crate::systems::{graded_integral, Observable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summability {
    /// The last summand exceeds the first nonzero one.
    pub diverging: bool,
    /// Tail summands fit a geometric law with ratio < 1.
    pub geometric: bool,
    pub tail_rho: Option<f64>,
    pub all_zero: bool,
}

impl Summability {
    pub fn summable(&self) -> bool {
        self.all_zero || (!self.diverging && self.geometric)
    }
}

/// Classify a finite run of nonnegative summands. The geometric fit uses the
/// second half of the run.
pub fn assess_summability(summands: &[f64]) -> Summability {
    let all_zero = summands.iter().all(|s| *s == 0.0);
    let first = summands.iter().copied().find(|s| *s > 0.0);
    let last = summands.last().copied().unwrap_or(0.0);
    let diverging = matches!(first, Some(f) if last > f);
    let half = summands.len() / 2;
    let tail: Vec<(usize, f64)> = summands.iter().enumerate().skip(half).map(|(i, s)| (i + 1, *s)).collect();
    let positive = tail.iter().filter(|(_, s)| *s > 0.0).count();
    let fit = fit_geometric(&tail, f64::MIN_POSITIVE);
    let geometric = if positive == 0 { true } else { matches!(fit, Some(f) if f.rho < 1.0) };
    Summability { diverging, geometric, tail_rho: fit.map(|f| f.rho), all_zero }
}

#[derive(Debug, Clone)]
pub struct SeriesReport {
    /// Summands for n = 1..=N.
    pub summands: Vec<f64>,
    pub partial: Vec<f64>,
    pub verdict: Summability,
}

impl SeriesReport {
    fn from_summands(summands: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let partial = summands
            .iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect();
        let verdict = assess_summability(&summands);
        SeriesReport { summands, partial, verdict }
    }

    pub fn total(&self) -> f64 {
        self.partial.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct RateConditionReport {
    pub gamma: f64,
    pub horizon: usize,
    /// Σ (log n)³ n^{1/γ+1/2} ‖K^n f − ν f‖²_4.
    pub sum1: SeriesReport,
    /// Σ (log n)³ n^{2γ} max_{0≤g≤N} ‖K^n(f K^g f) − ν(f K^g f)‖²_2, a scan
    /// with j = n fixed standing in for the sup over i ≥ j ≥ n.
    pub sum2: SeriesReport,
    /// Whether ν(f⁴) appears finite (truncated integrals stabilize).
    pub fourth_moment_finite: bool,
}

/// ν(|f|^q) restricted to [ε, 1] for two cutoffs; finite moments agree.
fn moment_stable(f: &Observable, op: &AnalyticTransfer, q: f64) -> bool {
    if !f.is_singular() {
        return f.nu_of(op.map(), |v| v.abs().powf(q)).is_finite();
    }
    let cut = |eps: f64| graded_integral(op.map(), |x| if x >= eps { f.eval(x).abs().powf(q) } else { 0.0 });
    let (a, b) = (cut(1e-8), cut(1e-16));
    b.is_finite() && (b - a).abs() <= 1e-3 * b.abs().max(1e-300)
}

pub fn check_rate_conditions(op: &AnalyticTransfer, f: &Observable, gamma: f64, horizon: usize, grid: &Arc<Grid>) -> Result<RateConditionReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0,1], got {gamma}")));
    }
    if horizon < 16 {
        return Err(invalid(format!("horizon must be at least 16, got {horizon}")));
    }
    let n_max = horizon;
    let powers = op.powers(f, n_max, grid)?;
    let kernel = op.kernel(grid);
    let weight = |n: usize, e: f64| (n as f64).ln().powi(3) * (n as f64).powf(e);

    let s1: Vec<f64> = (1..=n_max)
        .map(|n| {
            let g = &powers[n];
            let d = g.deviation_norm(g.nu(), 4.0);
            if d < NORM_FLOOR {
                0.0
            } else {
                weight(n, 1.0 / gamma + 0.5) * d * d
            }
        })
        .collect();

    let base = &powers[0];
    let mut sup2 = vec![0.0f64; n_max];
    for later in &powers[..=n_max] {
        let u = base.zip_with(later, |a, b| a * b);
        let mut cur = u;
        for slot in sup2.iter_mut() {
            cur = kernel.apply(&cur);
            let d = cur.deviation_norm(cur.nu(), 2.0);
            *slot = slot.max(d);
        }
    }
    let s2: Vec<f64> = sup2
        .iter()
        .enumerate()
        .map(|(i, d)| if *d < NORM_FLOOR { 0.0 } else { weight(i + 1, 2.0 * gamma) * d * d })
        .collect();

    Ok(RateConditionReport {
        gamma,
        horizon,
        sum1: SeriesReport::from_summands(s1),
        sum2: SeriesReport::from_summands(s2),
        fourth_moment_finite: moment_stable(f, op, 4.0),
    })
}

#[derive(Debug, Clone)]
pub struct LipschitzDecayPart {
    /// Dictionary maximum for i = 1..=N.
    pub maxima: Vec<f64>,
    pub fit: Option<GeometricFit>,
    /// Smallest C with maxima_i ≤ C ρ̂^i on the computed range.
    pub c_hat: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LipschitzDecayReport {
    pub dict_size: usize,
    pub horizon: usize,
    /// sup over 1-Lipschitz hinges of ‖K^i g − ν(g)‖_∞ (a lower bound).
    pub part_one: LipschitzDecayPart,
    /// sup over two-variable hinges and j ≥ 0 of ‖K^i Q_j h − ν(Q_j h)‖_∞.
    pub part_two: LipschitzDecayPart,
}

fn decay_part(maxima: Vec<f64>) -> LipschitzDecayPart {
    let pairs: Vec<(usize, f64)> = maxima.iter().enumerate().map(|(i, v)| (i + 1, *v)).collect();
    let fit = fit_geometric(&pairs, NORM_FLOOR);
    let c_hat = fit.map(|f| pairs.iter().map(|(i, v)| v / f.rho.powi(*i as i32)).fold(0.0, f64::max));
    LipschitzDecayPart { maxima, fit, c_hat }
}

/// Dictionary evaluation of the Lipschitz decay condition.
///
/// Part one: g_t(x) = |x − t| at `dict_size` knots, plus x and a constant.
/// Part two: h(x, y) = (|x − s| + |y − t|)/2, for which
/// Q_j h(x) = (|x − s| + K^j|· − t|(x))/2, so K^i Q_j h − ν = ½(K^i g_s − ν) +
/// ½(K^{i+j} g_t − ν); j is scanned over 0..=N.
pub fn check_lipschitz_decay(op: &AnalyticTransfer, horizon: usize, dict_size: usize, grid: &Arc<Grid>) -> Result<LipschitzDecayReport> {
    if dict_size < 8 {
        return Err(invalid(format!("dictionary needs at least 8 knots, got {dict_size}")));
    }
    let n = horizon;
    let kernel = op.kernel(grid);
    let knots: Vec<f64> = (0..dict_size).map(|i| (i as f64 + 0.5) / dict_size as f64).collect();
    let mut dict: Vec<GridFn> = knots.iter().map(|t| GridFn::sample(grid, Interp::Linear, |x| (x - t).abs())).collect();
    dict.push(GridFn::sample(grid, Interp::Cubic, |x| x));
    dict.push(GridFn::constant(grid, 1.0, Interp::Cubic));

    // centered iterates K^i g − ν(g) for i = 0..=2N
    let mut centered: Vec<Vec<Vec<f64>>> = Vec::with_capacity(dict.len());
    for g in &dict {
        let mut iters = Vec::with_capacity(2 * n + 1);
        let mut cur = g.clone();
        for i in 0..=2 * n {
            if i > 0 {
                cur = kernel.apply(&cur);
            }
            let c = cur.nu();
            iters.push(cur.values().iter().map(|v| v - c).collect::<Vec<f64>>());
        }
        centered.push(iters);
    }
    let sup = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);

    let one: Vec<f64> = (1..=n).map(|i| centered.iter().map(|it| sup(&it[i])).fold(0.0, f64::max)).collect();

    let hinges = &centered[..dict_size];
    let mut two = vec![0.0f64; n];
    for (i, slot) in two.iter_mut().enumerate().map(|(k, s)| (k + 1, s)) {
        for s in hinges {
            for t in hinges {
                for j in 0..=n {
                    let a = &s[i];
                    let b = &t[i + j];
                    let m = a.iter().zip(b).map(|(x, y)| (0.5 * (x + y)).abs()).fold(0.0, f64::max);
                    *slot = slot.max(m);
                }
            }
        }
    }
    Ok(LipschitzDecayReport { dict_size, horizon, part_one: decay_part(one), part_two: decay_part(two) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_control_is_not_summable() {
        // ρ = 1: norms stay at 1, so the weighted summands grow.
        let summands: Vec<f64> = (1..=30).map(|n: usize| (n as f64).ln().powi(3) * (n as f64).powf(2.2)).collect();
        let v = assess_summability(&summands);
        assert!(v.diverging && !v.summable());
    }

    #[test]
    fn geometric_run_is_summable() {
        let summands: Vec<f64> = (1..=30).map(|n| 0.5f64.powi(n)).collect();
        assert!(assess_summability(&summands).summable());
    }
}
