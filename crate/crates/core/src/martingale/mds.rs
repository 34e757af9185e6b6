use std::sync::Arc;

use super::blocks::level_of;
use super::mfunction::MFunction;
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::systems::{iterate, typical_orbit, IntervalMap, ReversedOrbit, GAUSS_POINT_BRANCHES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// A finitely supported law.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    pub atoms: Vec<Atom>,
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("a law needs at least one atom"));
        }
        if let Some(a) = atoms.iter().find(|a| a.weight < 0.0 || !a.weight.is_finite()) {
            return Err(Error::NegativeWeight(a.weight));
        }
        Ok(DiscreteLaw { atoms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(value, weight)| Atom { value, weight }).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.value).sum::<f64>() / self.total_weight()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.value * a.value).sum::<f64>() / self.total_weight()
    }

    /// Largest |value| among atoms of positive weight.
    pub fn spread(&self) -> f64 {
        self.atoms.iter().filter(|a| a.weight > 0.0).map(|a| a.value.abs()).fold(0.0, f64::max)
    }
}

/// Law of m(s_i(v), v) over the preimages of v. Gauss preimages beyond the
/// explicit range are lumped into one atom placed so that the law has mean
/// exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLaw {
    pub law: DiscreteLaw,
    /// Atom of the preimage that the orbit actually took, when known.
    pub actual: Option<usize>,
}

pub fn conditional_law(mfun: &MFunction, v: f64, actual_branch: Option<usize>) -> ConditionalLaw {
    let ka = mfun.ka(v);
    let explicit = match actual_branch {
        Some(b) if mfun.map().is_gauss() => mfun.gauss_branches().max(b + 1),
        _ => mfun.gauss_branches(),
    };
    let mut atoms = Vec::new();
    let mut actual = None;
    let (tail, _) = mfun.map().for_each_preimage(v, explicit, |k, x, w| {
        if Some(k) == actual_branch {
            actual = Some(atoms.len());
        }
        atoms.push(Atom { value: mfun.a(x) - ka, weight: w });
    });
    if tail > 0.0 {
        let sum: f64 = atoms.iter().map(|a| a.weight * a.value).sum();
        atoms.push(Atom { value: -sum / tail, weight: tail });
    }
    ConditionalLaw { law: DiscreteLaw { atoms }, actual }
}

/// |Σ_i w_i(v) m(s_i(v), v)| with the m-function evaluated branch by branch
/// (Gauss: 4096 explicit preimages plus an Euler-Maclaurin tail).
pub fn centering_defect(mfun: &MFunction, v: f64) -> f64 {
    let ka = mfun.ka(v);
    let mut acc = 0.0;
    let (tail, _) = mfun.map().for_each_preimage(v, GAUSS_POINT_BRANCHES, |_, x, w| acc += w * (mfun.a(x) - ka));
    if tail > 0.0 {
        acc += IntervalMap::gauss_tail_sum(|x| mfun.a(x) - ka, v, GAUSS_POINT_BRANCHES);
    }
    acc.abs()
}

/// d*_ℓ = m(T^{ℓ−1}x, T^ℓ x) along an orbit, ℓ = 1..n−1. In block mode the
/// m-function changes with the dyadic level of ℓ.
#[derive(Debug, Clone)]
pub struct ReverseMds {
    mfuns: Vec<Arc<MFunction>>,
    pub orbit: Vec<f64>,
    /// `branches[i]` is the branch of T holding `orbit[i]`.
    pub branches: Vec<usize>,
    /// `increments[ℓ − 1]` = d*_ℓ.
    pub increments: Vec<f64>,
}

impl ReverseMds {
    /// Single m-function for every ℓ.
    pub fn new(mfun: Arc<MFunction>, orbit: ReversedOrbit) -> Result<Self> {
        Self::blocked(vec![mfun], orbit)
    }

    /// `mfuns[j]` serves the ℓ of dyadic level j (the last one serves all
    /// higher levels).
    pub fn blocked(mfuns: Vec<Arc<MFunction>>, orbit: ReversedOrbit) -> Result<Self> {
        if orbit.points.len() < 2 {
            return Err(invalid("reverse martingale needs an orbit of at least 2 points"));
        }
        if mfuns.is_empty() {
            return Err(invalid("no m-function supplied"));
        }
        let mut s = ReverseMds { mfuns, orbit: orbit.points, branches: orbit.branches, increments: Vec::new() };
        s.increments = (1..s.orbit.len()).map(|l| s.mfun_for(l).m_eval(s.orbit[l - 1], s.orbit[l])).collect();
        Ok(s)
    }

    /// Orbit of n points from x0 by forward iteration; fine for short n.
    pub fn from_start(mfun: Arc<MFunction>, x0: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("reverse martingale needs n >= 2"));
        }
        let points = iterate(mfun.map(), x0, n)?;
        let branches = points.iter().map(|x| mfun.map().branch_index(*x)).collect();
        Self::new(mfun, ReversedOrbit { points, branches })
    }

    /// A ν-typical orbit of n points.
    pub fn sample(mfun: Arc<MFunction>, n: usize, rng: &mut Rng) -> Result<Self> {
        if n < 2 {
            return Err(invalid("reverse martingale needs n >= 2"));
        }
        let orbit = typical_orbit(mfun.map(), n - 1, rng);
        Self::new(mfun, orbit)
    }

    pub fn map(&self) -> &IntervalMap {
        self.mfuns[0].map()
    }

    pub fn mfun_for(&self, ell: usize) -> &MFunction {
        let j = level_of(ell).min(self.mfuns.len() - 1);
        &self.mfuns[j]
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increment(&self, ell: usize) -> f64 {
        self.increments[ell - 1]
    }

    /// Law of d*_ℓ given T^ℓ x, with the atom the orbit realized.
    pub fn conditional_law(&self, ell: usize) -> ConditionalLaw {
        conditional_law(self.mfun_for(ell), self.orbit[ell], Some(self.branches[ell - 1]))
    }
}
