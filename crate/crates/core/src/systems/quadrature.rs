//! ν-integrals: midpoint rule on uniform cells whose weights are the exact
//! ν-masses, with cells split at supplied breakpoints.

use super::map::IntervalMap;
use crate::numerics::Compensated;

pub const QUAD_CELLS: usize = 1 << 16;

/// Exponent of the graded substitution x = u^q used for integrands with an
/// algebraic singularity at 0.
const GRADING: i32 = 10;

#[derive(Debug, Clone)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(map: &IntervalMap, breaks: &[f64]) -> Self {
        let m = QUAD_CELLS;
        let table = map.cdf_table();
        let mut breaks: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut nodes = Vec::with_capacity(m + breaks.len());
        let mut weights = Vec::with_capacity(m + breaks.len());
        let mut bi = 0;
        for i in 0..m {
            let lo = i as f64 / m as f64;
            let hi = (i + 1) as f64 / m as f64;
            let start = bi;
            while bi < breaks.len() && breaks[bi] < hi {
                bi += 1;
            }
            let inner: Vec<f64> = breaks[start..bi].iter().copied().filter(|b| *b > lo).collect();
            if inner.is_empty() {
                nodes.push(0.5 * (lo + hi));
                weights.push(table[i + 1] - table[i]);
            } else {
                let mut cuts = vec![lo];
                cuts.extend(inner);
                cuts.push(hi);
                for w in cuts.windows(2) {
                    nodes.push(0.5 * (w[0] + w[1]));
                    weights.push(map.nu_cdf(w[1]) - map.nu_cdf(w[0]));
                }
            }
        }
        Quadrature { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = Compensated::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * g(*x));
        }
        acc.value()
    }
}

/// ν(g) for g with an integrable algebraic singularity at 0, via x = u^q.
pub fn graded_integral(map: &IntervalMap, mut g: impl FnMut(f64) -> f64) -> f64 {
    let m = QUAD_CELLS;
    let du = 1.0 / m as f64;
    let q = GRADING as f64;
    let mut acc = Compensated::default();
    for i in 0..m {
        let u = (i as f64 + 0.5) * du;
        let x = u.powi(GRADING);
        acc.add(g(x) * map.h(x) * q * u.powi(GRADING - 1) * du);
    }
    acc.value()
}
