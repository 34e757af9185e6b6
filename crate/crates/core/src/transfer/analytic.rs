use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{prefix_integral, Grid, GridFn};
use crate::systems::{IntervalMap, Observable, GAUSS_POINT_BRANCHES};

/// Explicit Gauss branches in grid kernels; the rest is an integral tail
/// with a first-order Euler–Maclaurin correction.
pub const GAUSS_GRID_BRANCHES: usize = 128;

/// K f(y) = Σ_i f(s_i(y)) h(s_i(y)) |s_i'(y)| / h(y), evaluated by branch sums.
#[derive(Debug, Clone)]
pub struct AnalyticTransfer {
    map: IntervalMap,
    grid_branches: usize,
    point_branches: usize,
}

/// The action of K at every midpoint of a grid, precomputed.
#[derive(Debug)]
pub struct GridKernel {
    grid: Arc<Grid>,
    offsets: Vec<u32>,
    points: Vec<f64>,
    weights: Vec<f64>,
    /// Per midpoint (mass, end, Σ Δ²-weight) of the Gauss tail; empty otherwise.
    tails: Vec<(f64, f64, f64)>,
}

impl AnalyticTransfer {
    pub fn new(map: &IntervalMap) -> Self {
        AnalyticTransfer { map: map.clone(), grid_branches: GAUSS_GRID_BRANCHES, point_branches: GAUSS_POINT_BRANCHES }
    }

    /// Override the number of explicit Gauss branches used on grids.
    pub fn with_grid_branches(mut self, k: usize) -> Self {
        self.grid_branches = k.max(1);
        self
    }

    /// Override the number of explicit Gauss branches in pointwise sums.
    pub fn with_point_branches(mut self, k: usize) -> Self {
        self.point_branches = k.max(1);
        self
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn grid_branches(&self) -> usize {
        self.grid_branches
    }

    fn guard(&self, y: f64) -> Result<()> {
        let h = self.map.h(y);
        if h > 0.0 && h.is_finite() {
            Ok(())
        } else {
            Err(Error::ZeroDensity(y))
        }
    }

    /// K f(y) for an arbitrary function.
    pub fn apply_fn(&self, f: &dyn Fn(f64) -> f64, y: f64) -> Result<f64> {
        self.guard(y)?;
        let mut acc = 0.0;
        let (tail, _) = self.map.for_each_preimage(y, self.point_branches, |_, x, w| acc += w * f(x));
        if tail > 0.0 {
            acc += IntervalMap::gauss_tail_sum(f, y, self.point_branches);
        }
        Ok(acc)
    }

    pub fn apply(&self, f: &Observable, y: f64) -> Result<f64> {
        self.apply_fn(&|x| f.eval(x), y)
    }

    /// K^n f at one point, by recursion over branches. Cost grows like
    /// branches^n; meant for small n and finite-branch maps.
    pub fn apply_power_fn(&self, f: &dyn Fn(f64) -> f64, n: usize, y: f64) -> Result<f64> {
        if n == 0 {
            return Ok(f(y));
        }
        let inner = |x: f64| self.apply_power_fn(f, n - 1, x).unwrap_or(f64::NAN);
        self.apply_fn(&inner, y)
    }

    pub fn kernel(&self, grid: &Arc<Grid>) -> GridKernel {
        let n = grid.cells();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut tails = Vec::new();
        offsets.push(0);
        let gauss = self.map.is_gauss();
        for y in grid.midpoints() {
            let (mass, end) = self.map.for_each_preimage(y, self.grid_branches, |_, x, w| {
                points.push(x);
                weights.push(w);
            });
            offsets.push(points.len() as u32);
            if gauss {
                let k = self.grid_branches as f64;
                let sq = (1.0 + y) / (3.0 * (k + 1.0 + y).powi(3));
                tails.push((mass, end, sq));
            }
        }
        GridKernel { grid: grid.clone(), offsets, points, weights, tails }
    }

    /// K f on the midpoints of `grid`, with f evaluated exactly at preimages.
    pub fn apply_on_grid(&self, f: &Observable, grid: &Arc<Grid>) -> Result<GridFn> {
        let values = grid.midpoints().map(|y| self.apply(f, y)).collect::<Result<Vec<_>>>()?;
        Ok(GridFn::new(grid.clone(), values, f.smoothness().into()))
    }

    /// K^n f for n = 0..=n on `grid`. The first step uses f itself, later
    /// steps interpolate the previous grid function.
    pub fn powers(&self, f: &Observable, n: usize, grid: &Arc<Grid>) -> Result<Vec<GridFn>> {
        let mut out = vec![GridFn::from_observable(grid, f)];
        if n == 0 {
            return Ok(out);
        }
        out.push(self.apply_on_grid(f, grid)?);
        let kernel = self.kernel(grid);
        for _ in 1..n {
            let next = kernel.apply(out.last().unwrap());
            out.push(next);
        }
        Ok(out)
    }

    /// K^n f on the grid.
    pub fn power_apply(&self, f: &Observable, n: usize, grid: &Arc<Grid>) -> Result<GridFn> {
        Ok(self.powers(f, n, grid)?.pop().unwrap())
    }
}

impl GridKernel {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn apply(&self, g: &GridFn) -> GridFn {
        assert!(Arc::ptr_eq(g.grid(), &self.grid), "grid function lives on another grid");
        let prefix = if self.tails.is_empty() { Vec::new() } else { g.lebesgue_prefix() };
        let n = self.grid.cells();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
            let mut acc = 0.0;
            for j in a..b {
                acc += self.weights[j] * g.eval(self.points[j]);
            }
            if let Some(&(mass, end, sq)) = self.tails.get(i) {
                let integral = prefix_integral(&prefix, g, end);
                // Right-endpoint sum over the tail exceeds the integral by
                // about ½ Σ Δ_k² g'.
                let slope = (g.eval(end) - g.eval(0.0)) / end;
                acc += mass / end * integral + 0.5 * sq * slope;
            }
            out.push(acc);
        }
        g.with_values(out)
    }

    pub fn apply_n(&self, g: &GridFn, n: usize) -> GridFn {
        let mut cur = g.clone();
        for _ in 0..n {
            cur = self.apply(&cur);
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_identity_closed_form() {
        let map = IntervalMap::doubling();
        let op = AnalyticTransfer::new(&map);
        let f = Observable::identity();
        for y in [0.0, 0.2, 0.77] {
            assert!((op.apply(&f, y).unwrap() - (y / 2.0 + 0.25)).abs() < 1e-15);
            assert!((op.apply_power_fn(&|x| x, 2, y).unwrap() - (y / 4.0 + 0.375)).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_preserves_constants() {
        let map = IntervalMap::gauss();
        let op = AnalyticTransfer::new(&map);
        for y in [0.0, 0.3, 0.999] {
            assert!((op.apply_fn(&|_| 1.0, y).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn power_apply_doubling_sup_deviation() {
        let map = IntervalMap::doubling();
        let op = AnalyticTransfer::new(&map);
        let grid = Grid::new(&map, 1 << 12);
        let g = op.power_apply(&Observable::identity(), 10, &grid).unwrap();
        let dev = g.deviation_norm(0.5, f64::INFINITY);
        let want = 2f64.powi(-10) * (0.5 - 0.5 / 4096.0);
        assert!((dev - want).abs() < 1e-14, "{dev} {want}");
    }
}
