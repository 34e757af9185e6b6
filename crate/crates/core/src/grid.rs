//! Functions sampled at the midpoints of a uniform cell partition of [0,1],
//! with ν-masses of the cells attached.

use std::sync::Arc;

use crate::numerics::Compensated;
use crate::systems::{IntervalMap, Observable, Smoothness};

/// How a grid function is evaluated between midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Four-point Lagrange; exact on cubics.
    Cubic,
    Linear,
    /// Piecewise constant on cells. Exact for step functions whose jumps
    /// sit on cell boundaries.
    Cell,
}

impl From<Smoothness> for Interp {
    fn from(s: Smoothness) -> Self {
        match s {
            Smoothness::Smooth => Interp::Cubic,
            Smoothness::Kinked => Interp::Linear,
            Smoothness::Step => Interp::Cell,
        }
    }
}

/// Cells of a uniform partition, further split at the jump points of the
/// invariant density. Interpolation never reaches across such a jump, so
/// functions that are smooth between jumps keep their accuracy.
#[derive(Debug)]
pub struct Grid {
    base: usize,
    bounds: Vec<f64>,
    mids: Vec<f64>,
    masses: Vec<f64>,
    /// First refined cell meeting each base cell.
    lookup: Vec<u32>,
    /// Smooth segment [start, end) of cells containing each cell.
    segments: Vec<(u32, u32)>,
    uniform: bool,
}

/// Density jumps lighter than this are not resolved by the grid.
const JUMP_WEIGHT_FLOOR: f64 = 1e-13;

impl Grid {
    pub fn new(map: &IntervalMap, cells: usize) -> Arc<Self> {
        let jumps = map.density().jumps_above(JUMP_WEIGHT_FLOOR);
        Self::with_jumps(map, cells, &jumps)
    }

    /// Uniform grid that ignores density jumps.
    pub fn uniform(map: &IntervalMap, cells: usize) -> Arc<Self> {
        Self::with_jumps(map, cells, &[])
    }

    pub fn with_jumps(map: &IntervalMap, cells: usize, jumps: &[f64]) -> Arc<Self> {
        assert!(cells >= 4, "grid needs at least four cells");
        let mut jumps: Vec<f64> = jumps.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        let m = cells as f64;
        let mut bounds = Vec::with_capacity(cells + jumps.len() + 1);
        let mut lookup = Vec::with_capacity(cells);
        let mut is_jump = Vec::with_capacity(cells + jumps.len() + 1);
        let mut ji = 0;
        for i in 0..cells {
            let lo = i as f64 / m;
            let hi = (i + 1) as f64 / m;
            lookup.push(bounds.len() as u32);
            bounds.push(lo);
            is_jump.push(false);
            while ji < jumps.len() && jumps[ji] < hi {
                if jumps[ji] > lo {
                    bounds.push(jumps[ji]);
                    is_jump.push(true);
                } else if jumps[ji] == lo {
                    *is_jump.last_mut().unwrap() = true;
                }
                ji += 1;
            }
        }
        bounds.push(1.0);
        is_jump.push(false);
        let n = bounds.len() - 1;
        let mids: Vec<f64> = bounds.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let masses = bounds.windows(2).map(|w| map.nu_cdf(w[1]) - map.nu_cdf(w[0])).collect();
        let mut segments = vec![(0u32, 0u32); n];
        let mut start = 0;
        for c in 0..n {
            if is_jump[c + 1] || c + 1 == n {
                for s in segments.iter_mut().take(c + 1).skip(start) {
                    *s = (start as u32, (c + 1) as u32);
                }
                start = c + 1;
            }
        }
        let uniform = n == cells;
        Arc::new(Grid { base: cells, bounds, mids, masses, lookup, segments, uniform })
    }

    /// Number of cells (after refinement).
    pub fn cells(&self) -> usize {
        self.mids.len()
    }

    pub fn base_cells(&self) -> usize {
        self.base
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.mids[i]
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.mids.iter().copied()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Index of the cell containing x.
    pub fn locate(&self, x: f64) -> usize {
        let u = ((x * self.base as f64).floor().max(0.0) as usize).min(self.base - 1);
        if self.uniform {
            return u;
        }
        let mut c = self.lookup[u] as usize;
        let last = self.mids.len() - 1;
        while c < last && self.bounds[c + 1] <= x {
            c += 1;
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct GridFn {
    grid: Arc<Grid>,
    values: Vec<f64>,
    interp: Interp,
}

impl GridFn {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, interp: Interp) -> Self {
        assert_eq!(grid.cells(), values.len());
        GridFn { grid, values, interp }
    }

    pub fn sample(grid: &Arc<Grid>, interp: Interp, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.midpoints().map(f).collect();
        GridFn { grid: grid.clone(), values, interp }
    }

    pub fn from_observable(grid: &Arc<Grid>, f: &Observable) -> Self {
        Self::sample(grid, f.smoothness().into(), |x| f.eval(x))
    }

    pub fn constant(grid: &Arc<Grid>, c: f64, interp: Interp) -> Self {
        GridFn { grid: grid.clone(), values: vec![c; grid.cells()], interp }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        GridFn::new(self.grid.clone(), values, self.interp)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|v| f(*v)).collect())
    }

    /// Pointwise combination with another function on the same grid.
    pub fn zip_with(&self, other: &GridFn, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.grid.uniform {
            self.eval_uniform(x)
        } else {
            self.eval_segmented(x)
        }
    }

    fn eval_uniform(&self, x: f64) -> f64 {
        let m = self.grid.base;
        let v = &self.values;
        match self.interp {
            Interp::Cell => {
                let i = ((x * m as f64).floor().max(0.0) as usize).min(m - 1);
                v[i]
            }
            Interp::Linear => {
                let p = x * m as f64 - 0.5;
                let i = (p.floor().max(0.0) as usize).min(m - 2);
                let t = p - i as f64;
                v[i] + t * (v[i + 1] - v[i])
            }
            Interp::Cubic => {
                let p = x * m as f64 - 0.5;
                let i = (p.floor().max(1.0) as usize).min(m - 3);
                let t = p - i as f64;
                let (a, b, c, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
                // Lagrange basis on nodes -1, 0, 1, 2.
                let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
                let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
                let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
                let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
                a * l0 + b * l1 + c * l2 + d * l3
            }
        }
    }

    fn eval_segmented(&self, x: f64) -> f64 {
        let g = &self.grid;
        let c = g.locate(x);
        let v = &self.values;
        let (s, e) = g.segments[c];
        let (s, e) = (s as usize, e as usize);
        let len = e - s;
        let order = match self.interp {
            Interp::Cell => 1,
            Interp::Linear => 2,
            Interp::Cubic => 4,
        }
        .min(len);
        if order == 1 {
            return v[c];
        }
        // left node k with mids[k] <= x < mids[k+1] (clamped to the segment)
        let k = if x < g.mids[c] { c.saturating_sub(1).max(s) } else { c };
        let first = (k + 1).saturating_sub(order / 2).max(s).min(e - order);
        let nodes = &g.mids[first..first + order];
        let vals = &v[first..first + order];
        let mut acc = 0.0;
        for i in 0..order {
            let mut l = 1.0;
            for j in 0..order {
                if i != j {
                    l *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            acc += l * vals[i];
        }
        acc
    }

    /// ν(g) with the cell masses as weights.
    pub fn nu(&self) -> f64 {
        let mut acc = Compensated::default();
        for (v, w) in self.values.iter().zip(&self.grid.masses) {
            acc.add(v * w);
        }
        acc.value()
    }

    /// ‖g − c‖_{q,ν}; q = ∞ gives the max over midpoints.
    pub fn deviation_norm(&self, c: f64, q: f64) -> f64 {
        if q.is_infinite() {
            return self.values.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
        }
        let mut acc = Compensated::default();
        for (v, w) in self.values.iter().zip(&self.grid.masses) {
            acc.add(w * (v - c).abs().powf(q));
        }
        acc.value().max(0.0).powf(1.0 / q)
    }

    pub fn norm(&self, q: f64) -> f64 {
        self.deviation_norm(0.0, q)
    }

    /// Lebesgue integrals ∫_0^{b_i} g over the cell bounds, using cell values.
    pub fn lebesgue_prefix(&self) -> Vec<f64> {
        let b = &self.grid.bounds;
        let mut out = Vec::with_capacity(self.values.len() + 1);
        let mut acc = Compensated::default();
        out.push(0.0);
        for (i, v) in self.values.iter().enumerate() {
            acc.add(v * (b[i + 1] - b[i]));
            out.push(acc.value());
        }
        out
    }
}

/// ∫_0^a g dx from a prefix table of a grid function.
pub fn prefix_integral(prefix: &[f64], g: &GridFn, a: f64) -> f64 {
    let c = g.grid.locate(a);
    prefix[c] + (a - g.grid.bounds[c]) * g.values[c]
}
