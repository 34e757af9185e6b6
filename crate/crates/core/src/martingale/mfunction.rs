use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use crate::systems::{IntervalMap, Observable};
use crate::transfer::{fit_decay, AnalyticTransfer, Norm};

/// Depth cap and target for the truncated series.
pub const DEFAULT_DEPTH: usize = 64;
const DEPTH_TARGET: f64 = 1e-12;
/// Explicit Gauss branches in pointwise sums of the m-function.
pub const MFUN_GAUSS_BRANCHES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MFunctionOptions {
    pub grid_cells: usize,
    /// Fixed depth J; `None` picks min(64, first j with ρ^j < 1e-12).
    pub depth: Option<usize>,
    pub decay_horizon: usize,
    pub gauss_branches: usize,
}

impl Default for MFunctionOptions {
    fn default() -> Self {
        MFunctionOptions { grid_cells: 1 << 14, depth: None, decay_horizon: 24, gauss_branches: MFUN_GAUSS_BRANCHES }
    }
}

/// m(u, v) = Σ_{j=0}^{J} (K^j f(u) − K^{j+1} f(v)).
///
/// Stored as A = f + A' with A' = Σ_{j=1}^{J} K^j f on a grid, so that
/// m(u, v) = A(u) − (KA)(v). KA is a pointwise branch sum over the same
/// preimages the conditional law uses, which makes every conditional law
/// centered whatever J is.
#[derive(Debug, Clone)]
pub struct MFunction {
    map: IntervalMap,
    op: AnalyticTransfer,
    f: Observable,
    nu_f: f64,
    /// K^j f for j = 0..=J+8 on the grid.
    powers: Vec<GridFn>,
    tail_sum: GridFn,
    depth: usize,
    rho: f64,
    envelope: f64,
    tail_bound: f64,
    variance: OnceLock<f64>,
}

impl MFunction {
    pub fn new(map: &IntervalMap, f: &Observable) -> Result<Self> {
        Self::with_options(map, f, MFunctionOptions::default())
    }

    pub fn with_options(map: &IntervalMap, f: &Observable, options: MFunctionOptions) -> Result<Self> {
        let op = AnalyticTransfer::new(map).with_point_branches(options.gauss_branches);
        let grid = Grid::new(map, options.grid_cells);
        let decay = fit_decay(&op, f, Norm::Sup, options.decay_horizon, &grid)?;
        let (rho, envelope) = if decay.degenerate {
            (0.0, 0.0)
        } else {
            let rho = decay.rho_hat.ok_or(Error::NoDecay(f64::NAN))?;
            if !(rho < 1.0) {
                return Err(Error::NoDecay(rho));
            }
            let c = decay.norms.iter().enumerate().map(|(i, v)| v / rho.powi(i as i32 + 1)).fold(0.0, f64::max);
            (rho, c)
        };
        let depth = options.depth.unwrap_or_else(|| {
            if rho == 0.0 {
                1
            } else {
                let j = (DEPTH_TARGET.ln() / rho.ln()).ceil() as usize;
                j.clamp(1, DEFAULT_DEPTH)
            }
        });
        let powers = op.powers(f, depth + 8, &grid)?;
        let n = grid.cells();
        let mut acc = vec![0.0; n];
        for p in &powers[1..=depth] {
            for (a, v) in acc.iter_mut().zip(p.values()) {
                *a += v;
            }
        }
        let tail_sum = powers[0].with_values(acc);
        let tail_bound = if rho == 0.0 { 0.0 } else { 2.0 * envelope * rho.powi(depth as i32 + 1) / (1.0 - rho) };
        Ok(MFunction { map: map.clone(), op, f: f.clone(), nu_f: f.nu_mean(map), powers, tail_sum, depth, rho, envelope, tail_bound, variance: OnceLock::new() })
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn observable(&self) -> &Observable {
        &self.f
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// C in ‖K^n f − ν f‖_∞ ≤ C ρ^n over the fitted range.
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    /// Bound on the change of m from terms beyond the depth.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn centering_tol(&self) -> f64 {
        (10.0 * self.tail_bound).max(1e-8)
    }

    pub fn nu_f(&self) -> f64 {
        self.nu_f
    }

    pub fn gauss_branches(&self) -> usize {
        self.op.grid_branches().max(MFUN_GAUSS_BRANCHES)
    }

    /// A(x) = Σ_{j=0}^{J} K^j f(x).
    pub fn a(&self, x: f64) -> f64 {
        self.f.eval(x) + self.tail_sum.eval(x)
    }

    /// (KA)(v) = Σ_{j=1}^{J+1} K^j f(v).
    pub fn ka(&self, v: f64) -> f64 {
        let mut acc = 0.0;
        let (tail, _) = self.map.for_each_preimage(v, MFUN_GAUSS_BRANCHES, |_, x, w| acc += w * self.a(x));
        if tail > 0.0 {
            acc += IntervalMap::gauss_tail_sum(|x| self.a(x), v, MFUN_GAUSS_BRANCHES);
        }
        acc
    }

    pub fn m_eval(&self, u: f64, v: f64) -> f64 {
        self.a(u) - self.ka(v)
    }

    /// r(y) = Σ_{ℓ=1}^{J} (K^ℓ f(y) − ν f).
    pub fn coboundary(&self, y: f64) -> f64 {
        self.tail_sum.eval(y) - self.depth as f64 * self.nu_f
    }

    /// E(X_ℓ | Y_0 = y) = K^ℓ f(y) − ν f, with the last step applied
    /// pointwise to the grid iterate.
    pub fn project(&self, lag: usize, y: f64) -> Result<f64> {
        let v = match lag {
            0 => self.f.eval(y),
            1 => self.op.apply(&self.f, y)?,
            _ if lag <= self.powers.len() => {
                let prev = &self.powers[lag - 1];
                self.op.apply_fn(&|x| prev.eval(x), y)?
            }
            _ => {
                let last = self.powers.last().unwrap();
                let mut g = last.clone();
                let kernel = self.op.kernel(last.grid());
                for _ in self.powers.len()..lag {
                    g = kernel.apply(&g);
                }
                self.op.apply_fn(&|x| g.eval(x), y)?
            }
        };
        Ok(v - self.nu_f)
    }

    /// The same series truncated at another depth, for truncation checks.
    pub fn m_eval_at_depth(&self, depth: usize, u: f64, v: f64) -> f64 {
        let depth = depth.min(self.powers.len() - 2);
        let a = |x: f64| self.f.eval(x) + self.powers[1..=depth].iter().map(|p| p.eval(x)).sum::<f64>();
        let mut acc = 0.0;
        let (tail, _) = self.map.for_each_preimage(v, MFUN_GAUSS_BRANCHES, |_, x, w| acc += w * a(x));
        if tail > 0.0 {
            acc += IntervalMap::gauss_tail_sum(a, v, MFUN_GAUSS_BRANCHES);
        }
        a(u) - acc
    }

    /// E(d²) = ν(m(x, Tx)²), by quadrature; computed once.
    pub fn increment_variance(&self) -> f64 {
        *self.variance.get_or_init(|| {
            let q = self.map.quadrature(self.f.breaks());
            q.integrate(|x| {
                let d = self.m_eval(x, self.map.apply(x));
                d * d
            })
        })
    }
}
