use std::sync::Arc;

use rand::Rng as _;

use super::density::{Density, Parry};
use super::quadrature::{Quadrature, QUAD_CELLS};
use crate::error::{invalid, Result};
use crate::numerics::{Compensated, GaussRule};
use crate::rng::Rng;

/// Explicit Gauss branches used by pointwise operator evaluations; the rest
/// of the countable family is handled by an integral tail.
pub const GAUSS_POINT_BRANCHES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// x ↦ βx mod 1. β = 2 is the doubling map.
    Beta { beta: f64 },
    /// x ↦ 1/x mod 1.
    Gauss,
    /// Two full linear branches: increasing on [0, s), decreasing on [s, 1).
    PiecewiseLinear { split: f64 },
}

/// One monotone piece of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub index: usize,
    /// Half-open [lo, hi) except for Gauss branches, which are (lo, hi].
    pub domain: (f64, f64),
    pub image: (f64, f64),
    pub increasing: bool,
}

impl Branch {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.domain.0 && x < self.domain.1
    }
}

/// A preimage of a point with its backward-kernel weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub branch: usize,
    pub point: f64,
    pub weight: f64,
}

/// Preimages of one point. For the Gauss map the branches beyond the
/// explicit cutoff are summarized by their total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimages {
    pub atoms: Vec<Preimage>,
    /// Weight carried by omitted branches, supported on (0, tail_end).
    pub tail_mass: f64,
    pub tail_end: f64,
}

struct Inner {
    name: String,
    kind: MapKind,
    lambda: f64,
    density: Density,
    /// ν-CDF at the uniform quadrature cell boundaries.
    cdf_table: Vec<f64>,
}

/// A piecewise monotone, uniformly expanding map of [0,1] together with its
/// absolutely continuous invariant probability ν. Cheap to clone.
#[derive(Clone)]
pub struct IntervalMap {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for IntervalMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntervalMap").field("name", &self.inner.name).field("kind", &self.inner.kind).finish()
    }
}

impl IntervalMap {
    pub fn doubling() -> Self {
        Self::build("doubling".into(), MapKind::Beta { beta: 2.0 }, 2.0, Density::Lebesgue)
    }

    pub fn beta(beta: f64) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be > 1, got {beta}")));
        }
        let density = if beta.fract() == 0.0 { Density::Lebesgue } else { Density::Parry(Parry::new(beta)) };
        Ok(Self::build(format!("beta({beta})"), MapKind::Beta { beta }, beta, density))
    }

    pub fn gauss() -> Self {
        // |T'(x)| = 1/x² ≥ 1 only; the second iterate expands by ≥ 4 on the
        // whole interval, which is what the class requires. λ is reported as
        // the two-step rate.
        Self::build("gauss".into(), MapKind::Gauss, 2.0, Density::Gauss)
    }

    pub fn piecewise_linear(split: f64) -> Result<Self> {
        if !(split > 0.0 && split < 1.0) {
            return Err(invalid(format!("split must lie in (0,1), got {split}")));
        }
        let lambda = (1.0 / split).min(1.0 / (1.0 - split));
        Ok(Self::build(
            format!("piecewise_linear({split})"),
            MapKind::PiecewiseLinear { split },
            lambda,
            Density::Lebesgue,
        ))
    }

    fn build(name: String, kind: MapKind, lambda: f64, density: Density) -> Self {
        let cdf_table = (0..=QUAD_CELLS).map(|i| density.cdf(i as f64 / QUAD_CELLS as f64)).collect();
        IntervalMap { inner: Arc::new(Inner { name, kind, lambda, density, cdf_table }) }
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn kind(&self) -> &MapKind {
        &self.inner.kind
    }

    pub fn lambda(&self) -> f64 {
        self.inner.lambda
    }

    pub fn density(&self) -> &Density {
        &self.inner.density
    }

    pub fn is_gauss(&self) -> bool {
        matches!(self.inner.kind, MapKind::Gauss)
    }

    /// Number of branches, `None` for the countable Gauss family.
    pub fn branch_count(&self) -> Option<usize> {
        match self.inner.kind {
            MapKind::Beta { beta } => Some(beta.ceil() as usize),
            MapKind::Gauss => None,
            MapKind::PiecewiseLinear { .. } => Some(2),
        }
    }

    pub fn branch(&self, k: usize) -> Branch {
        match self.inner.kind {
            MapKind::Beta { beta } => {
                let lo = k as f64 / beta;
                let hi = ((k + 1) as f64 / beta).min(1.0);
                Branch { index: k, domain: (lo, hi), image: (0.0, (beta - k as f64).min(1.0)), increasing: true }
            }
            MapKind::Gauss => {
                let j = (k + 1) as f64;
                Branch { index: k, domain: (1.0 / (j + 1.0), 1.0 / j), image: (0.0, 1.0), increasing: false }
            }
            MapKind::PiecewiseLinear { split } => {
                if k == 0 {
                    Branch { index: 0, domain: (0.0, split), image: (0.0, 1.0), increasing: true }
                } else {
                    Branch { index: 1, domain: (split, 1.0), image: (0.0, 1.0), increasing: false }
                }
            }
        }
    }

    /// Index of the branch whose domain holds x (x = 1 goes to the last branch).
    pub fn branch_index(&self, x: f64) -> usize {
        match self.inner.kind {
            MapKind::Beta { beta } => {
                let last = beta.ceil() as usize - 1;
                ((beta * x).floor().max(0.0) as usize).min(last)
            }
            MapKind::Gauss => {
                if x <= 0.0 {
                    usize::MAX
                } else {
                    ((1.0 / x).floor().max(1.0) as usize) - 1
                }
            }
            MapKind::PiecewiseLinear { split } => usize::from(x >= split),
        }
    }

    /// T(x).
    pub fn apply(&self, x: f64) -> f64 {
        match self.inner.kind {
            MapKind::Beta { beta } => {
                let k = self.branch_index(x);
                beta * x - k as f64
            }
            MapKind::Gauss => {
                if x <= 0.0 {
                    0.0
                } else {
                    let r = 1.0 / x;
                    let v = r - r.floor();
                    v.max(0.0)
                }
            }
            MapKind::PiecewiseLinear { split } => {
                if x < split {
                    x / split
                } else {
                    (1.0 - x) / (1.0 - split)
                }
            }
        }
    }

    /// |T'(x)|.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.inner.kind {
            MapKind::Beta { beta } => beta,
            MapKind::Gauss => 1.0 / (x * x),
            MapKind::PiecewiseLinear { split } => {
                if x < split {
                    1.0 / split
                } else {
                    1.0 / (1.0 - split)
                }
            }
        }
    }

    /// Inverse branch s_k(y).
    pub fn inverse(&self, k: usize, y: f64) -> f64 {
        match self.inner.kind {
            MapKind::Beta { beta } => (y + k as f64) / beta,
            MapKind::Gauss => 1.0 / ((k + 1) as f64 + y),
            MapKind::PiecewiseLinear { split } => {
                if k == 0 {
                    split * y
                } else {
                    1.0 - (1.0 - split) * y
                }
            }
        }
    }

    /// |s_k'(y)|.
    pub fn inverse_derivative(&self, k: usize, y: f64) -> f64 {
        match self.inner.kind {
            MapKind::Beta { beta } => 1.0 / beta,
            MapKind::Gauss => {
                let d = (k + 1) as f64 + y;
                1.0 / (d * d)
            }
            MapKind::PiecewiseLinear { split } => {
                if k == 0 {
                    split
                } else {
                    1.0 - split
                }
            }
        }
    }

    /// Whether y lies in the image of branch k.
    pub fn in_image(&self, k: usize, y: f64) -> bool {
        match self.inner.kind {
            MapKind::Beta { beta } => y < beta - k as f64,
            _ => true,
        }
    }

    pub fn nu_cdf(&self, x: f64) -> f64 {
        self.inner.density.cdf(x)
    }

    pub fn h(&self, x: f64) -> f64 {
        self.inner.density.eval(x)
    }

    pub(crate) fn cdf_table(&self) -> &[f64] {
        &self.inner.cdf_table
    }

    /// Weight of the omitted Gauss branches k > `explicit` at y.
    pub fn gauss_tail_mass(explicit: usize, y: f64) -> f64 {
        (1.0 + y) / (explicit as f64 + 1.0 + y)
    }

    /// Σ_{k ≥ explicit} w_k(y) g(s_k(y)) over the omitted Gauss branches.
    /// Euler-Maclaurin in the branch index t, where branch t sits at 1/(t+y):
    /// the integral becomes (1+y)∫ g(x)/(1+x) dx on (0, 1/(t₀+y)), plus the
    /// half endpoint term and the first and third derivative corrections, by
    /// five-point differences. A plain Riemann tail would leave O(t₀⁻³).
    pub fn gauss_tail_sum(g: impl Fn(f64) -> f64, y: f64, explicit: usize) -> f64 {
        let term = |t: f64| {
            let x = 1.0 / (t + y);
            (1.0 + y) * (x - 1.0 / (t + 1.0 + y)) * g(x)
        };
        let t0 = explicit as f64 + 1.0;
        let end = 1.0 / (t0 + y);
        // x = end·u⁴ keeps singular observables at 0 integrable.
        let integral = GaussRule::new(12).integrate(0.0, 1.0, |u| {
            let x = end * u.powi(4);
            g(x) / (1.0 + x) * 4.0 * u.powi(3) * end
        });
        // The summand is smooth in t, so the stencil need not sit on branches.
        const H: f64 = 0.25;
        let (m2, m1, p1, p2) = (term(t0 - 2.0 * H), term(t0 - H), term(t0 + H), term(t0 + 2.0 * H));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * H);
        let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * H * H * H);
        (1.0 + y) * integral + term(t0) / 2.0 - d1 / 12.0 + d3 / 720.0
    }

    /// Calls `visit(branch, point, weight)` for each preimage of y, with
    /// Gauss truncated at `gauss_branches`. Returns (tail_mass, tail_end).
    pub fn for_each_preimage(&self, y: f64, gauss_branches: usize, mut visit: impl FnMut(usize, f64, f64)) -> (f64, f64) {
        match self.inner.kind {
            MapKind::Beta { beta } => {
                let hy = self.h(y);
                let n = beta.ceil() as usize;
                for k in 0..n {
                    if self.in_image(k, y) {
                        let x = (y + k as f64) / beta;
                        visit(k, x, self.h(x) / (beta * hy));
                    }
                }
                (0.0, 0.0)
            }
            MapKind::Gauss => {
                // w_k = (1+y)(s_k - s_{k+1}) with s_k = 1/(k+y).
                let mut s_prev = 1.0 / (1.0 + y);
                for k in 0..gauss_branches {
                    let s_next = 1.0 / ((k + 2) as f64 + y);
                    visit(k, s_prev, (1.0 + y) * (s_prev - s_next));
                    s_prev = s_next;
                }
                (Self::gauss_tail_mass(gauss_branches, y), s_prev)
            }
            MapKind::PiecewiseLinear { split } => {
                visit(0, split * y, split);
                visit(1, 1.0 - (1.0 - split) * y, 1.0 - split);
                (0.0, 0.0)
            }
        }
    }

    pub fn preimages_truncated(&self, y: f64, gauss_branches: usize) -> Preimages {
        let mut atoms = Vec::new();
        let (tail_mass, tail_end) =
            self.for_each_preimage(y, gauss_branches, |branch, point, weight| atoms.push(Preimage { branch, point, weight }));
        Preimages { atoms, tail_mass, tail_end }
    }

    /// All solutions of T(x) = y with weights h(x)|s'(y)|/h(y).
    pub fn preimages(&self, y: f64) -> Preimages {
        self.preimages_truncated(y, GAUSS_POINT_BRANCHES)
    }

    /// Draw a point from ν by inverting the CDF, piecewise linearly between
    /// quadrature cell boundaries.
    pub fn sample_nu(&self, rng: &mut Rng) -> f64 {
        let u: f64 = rng.random();
        self.nu_quantile(u)
    }

    pub fn nu_quantile(&self, u: f64) -> f64 {
        let table = self.cdf_table();
        let i = table.partition_point(|c| *c <= u).clamp(1, table.len() - 1) - 1;
        let (c0, c1) = (table[i], table[i + 1]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        ((i as f64 + t) / QUAD_CELLS as f64).clamp(0.0, 1.0 - f64::EPSILON)
    }

    /// One backward-chain step from y: pick a preimage with probability
    /// equal to its weight. Returns (branch, point). Exact for Gauss (the
    /// branch index is sampled in closed form).
    pub fn step_back(&self, y: f64, rng: &mut Rng) -> (usize, f64) {
        let u: f64 = rng.random();
        match self.inner.kind {
            MapKind::Gauss => {
                // P(branch index ≤ j) = 1 - (1+y)/(j+2+y), j = 0, 1, ...
                let j = ((1.0 + y) / (1.0 - u) - 2.0 - y).ceil().max(0.0);
                let k = j as usize;
                (k, 1.0 / (j + 1.0 + y))
            }
            MapKind::Beta { beta: 2.0 } => {
                let k = usize::from(u >= 0.5);
                (k, (y + k as f64) * 0.5)
            }
            _ => {
                let mut acc = 0.0;
                let mut chosen = None;
                let mut last = (0, y);
                self.for_each_preimage(y, 0, |k, x, w| {
                    acc += w;
                    last = (k, x);
                    if chosen.is_none() && u < acc {
                        chosen = Some((k, x));
                    }
                });
                chosen.unwrap_or(last)
            }
        }
    }

    /// Uniform-cell quadrature for ν with breakpoints at density jumps and
    /// branch ends, plus any extra points supplied.
    pub fn quadrature(&self, extra_breaks: &[f64]) -> Quadrature {
        let mut breaks = self.inner.density.jumps();
        breaks.extend(self.branch_ends(64));
        breaks.extend_from_slice(extra_breaks);
        Quadrature::new(self, &breaks)
    }

    /// Interior branch endpoints (the first `cap` Gauss endpoints).
    pub fn branch_ends(&self, cap: usize) -> Vec<f64> {
        match self.inner.kind {
            MapKind::Beta { beta } => (1..beta.ceil() as usize).map(|k| k as f64 / beta).collect(),
            MapKind::Gauss => (2..cap + 2).map(|k| 1.0 / k as f64).collect(),
            MapKind::PiecewiseLinear { split } => vec![split],
        }
    }

    /// ν(f · g∘T), integrated branch by branch in the forward variable with
    /// Gauss–Legendre panels. Each piece is graded by x = a + (b−a)(3u² − 2u³),
    /// which tames singularities of g at branch images of 0 and 1. Gauss
    /// branches beyond the explicit range are summed in the image variable.
    pub fn integrate_composed(&self, f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64) -> f64 {
        let rule = GaussRule::new(16);
        let jumps = self.inner.density.jumps();
        let mut acc = Compensated::default();
        let mut piece = |a: f64, b: f64, panels: usize| {
            let mut cuts = vec![a];
            cuts.extend(jumps.iter().copied().filter(|t| *t > a && *t < b));
            cuts.push(b);
            for w in cuts.windows(2) {
                let (lo, len) = (w[0], w[1] - w[0]);
                acc.add(rule.integrate_panels(0.0, 1.0, panels, |u| {
                    let x = lo + len * u * u * (3.0 - 2.0 * u);
                    f(x) * g(self.apply(x)) * self.h(x) * len * 6.0 * u * (1.0 - u)
                }));
            }
        };
        match self.inner.kind {
            MapKind::Gauss => {
                let explicit = GAUSS_POINT_BRANCHES;
                for k in 0..explicit {
                    let (lo, hi) = self.branch(k).domain;
                    piece(lo, hi, if k < 64 { 16 } else { 2 });
                }
                // Σ_{k ≥ K} ∫ f h g∘T over branch k = ∫ g(y) h(y) Σ_k w_k(y) f(s_k(y)) dy;
                // y = u² for singular g at 0.
                acc.add(rule.integrate_panels(0.0, 1.0, 8, |u| {
                    let y = u * u;
                    2.0 * u * g(y) * self.h(y) * Self::gauss_tail_sum(f, y, explicit)
                }));
            }
            _ => {
                for k in 0..self.branch_count().unwrap_or(0) {
                    let (lo, hi) = self.branch(k).domain;
                    piece(lo, hi, 64);
                }
            }
        }
        acc.value()
    }
}
