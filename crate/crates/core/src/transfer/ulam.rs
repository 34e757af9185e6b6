use std::sync::Arc;

use crate::grid::{Grid, GridFn, Interp};
use crate::systems::{IntervalMap, MapKind};

/// Ulam discretization of the backward kernel: P[i][j] is the ν-probability
/// that a chain in cell i moves to cell j. Entries come from exact interval
/// geometry: P[i][j] = ν(C_j ∩ T⁻¹C_i) / ν(C_i).
#[derive(Debug)]
pub struct UlamTransfer {
    grid: Arc<Grid>,
    rows: Vec<Vec<(u32, f64)>>,
}

/// Spread the ν-mass of [lo, hi] over the uniform cells it meets.
fn spread(map: &IntervalMap, m: usize, lo: f64, hi: f64, mut put: impl FnMut(usize, f64)) {
    let (lo, hi) = (lo.min(hi).max(0.0), lo.max(hi).min(1.0));
    if hi <= lo {
        return;
    }
    let first = ((lo * m as f64).floor() as usize).min(m - 1);
    let last = ((hi * m as f64).ceil() as usize).clamp(first + 1, m);
    for j in first..last {
        let a = lo.max(j as f64 / m as f64);
        let b = hi.min((j + 1) as f64 / m as f64);
        if b > a {
            put(j, map.nu_cdf(b) - map.nu_cdf(a));
        }
    }
}

/// Merge repeated column indices of a sparse row.
fn compact(mut row: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    row.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

impl UlamTransfer {
    pub fn new(map: &IntervalMap, cells: usize) -> Self {
        let grid = Grid::uniform(map, cells);
        let m = cells;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let (a, b) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
            let mut row = Vec::new();
            match map.kind() {
                MapKind::Gauss => {
                    // branches whose image of C_i stays inside cell 0 are lumped
                    let explicit = m;
                    for k in 0..explicit {
                        spread(map, m, map.inverse(k, a), map.inverse(k, b), |j, w| row.push((j as u32, w)));
                    }
                    let e = explicit as f64;
                    let tail = ((e + 1.0 + b) / (e + 1.0 + a)).ln() / std::f64::consts::LN_2;
                    row.push((0, tail));
                }
                _ => {
                    for k in 0..map.branch_count().unwrap_or(0) {
                        let (_, top) = map.branch(k).image;
                        let hi = b.min(top);
                        if hi > a {
                            spread(map, m, map.inverse(k, a), map.inverse(k, hi), |j, w| row.push((j as u32, w)));
                        }
                    }
                }
            }
            let mass = grid.masses()[i];
            let row = compact(row).into_iter().map(|(j, w)| (j, w / mass)).collect();
            rows.push(row);
        }
        UlamTransfer { grid, rows }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    /// max_i |Σ_j P[i][j] − 1|.
    pub fn row_sum_defect(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// ‖μP − μ‖₁ for the cell masses μ.
    pub fn stationarity_defect(&self) -> f64 {
        let mu = self.grid.masses();
        let mut out = vec![0.0; mu.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, p) in r {
                out[j as usize] += mu[i] * p;
            }
        }
        out.iter().zip(mu).map(|(a, b)| (a - b).abs()).sum()
    }

    /// (P g)_i = Σ_j P[i][j] g_j, the discrete K.
    pub fn apply(&self, g: &GridFn) -> GridFn {
        let out = self.rows.iter().map(|r| r.iter().map(|&(j, p)| p * g.values()[j as usize]).sum()).collect();
        g.with_values(out)
    }

    /// K^n f on the Ulam grid, starting from cell averages of f.
    pub fn power_apply(&self, f: &dyn Fn(f64) -> f64, n: usize) -> GridFn {
        let map_cells = self.cells();
        let sub = 16;
        let values = (0..map_cells)
            .map(|i| {
                (0..sub).map(|s| f((i as f64 + (s as f64 + 0.5) / sub as f64) / map_cells as f64)).sum::<f64>() / sub as f64
            })
            .collect();
        let mut g = GridFn::new(self.grid.clone(), values, Interp::Cell);
        for _ in 0..n {
            g = self.apply(&g);
        }
        g
    }
}

/// Invariant density estimated as the fixed point of the Lebesgue Ulam
/// matrix of the forward map (cell i to cell j with probability
/// Leb(C_i ∩ T⁻¹C_j)/Leb(C_i)). Finite-branch maps only. Returns the density
/// value on each cell.
pub fn ulam_density(map: &IntervalMap, cells: usize, iterations: usize) -> Vec<f64> {
    let m = cells;
    let lebesgue = IntervalMap::doubling();
    // column-oriented: for each target j, sources i with weight
    let mut incoming: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
    for (j, inc) in incoming.iter_mut().enumerate() {
        let (a, b) = (j as f64 / m as f64, (j + 1) as f64 / m as f64);
        for k in 0..map.branch_count().unwrap_or(0) {
            let (_, top) = map.branch(k).image;
            let hi = b.min(top);
            if hi > a {
                spread(&lebesgue, m, map.inverse(k, a), map.inverse(k, hi), |i, w| inc.push((i as u32, w * m as f64)));
            }
        }
    }
    let mut pi = vec![1.0 / m as f64; m];
    for _ in 0..iterations {
        let next: Vec<f64> = incoming.iter().map(|inc| inc.iter().map(|&(i, w)| pi[i as usize] * w).sum()).collect();
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / total).collect();
    }
    pi.into_iter().map(|p| p * m as f64).collect()
}
