//! Expanding interval maps, their invariant densities and the observable
//! catalog.

mod density;
mod map;
mod observable;
mod quadrature;

use std::collections::BTreeMap;

pub use density::{Density, Parry};
pub use map::{Branch, IntervalMap, MapKind, Preimage, Preimages, GAUSS_POINT_BRANCHES};
pub use observable::{check_mon_combo, MonCombo, MonPiece, Observable, RealFn, Regularity, Smoothness, OBSERVABLES};
pub use quadrature::{graded_integral, Quadrature, QUAD_CELLS};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Names accepted by [`map_catalog`].
pub const MAPS: &[(&str, &str)] = &[
    ("doubling", "x -> 2x mod 1; Lebesgue"),
    ("beta", "x -> beta x mod 1; Parry density; params: beta (default 1.5)"),
    ("gauss", "x -> 1/x mod 1; density 1/((1+x) ln 2)"),
    ("piecewise_linear", "increasing on [0,s), decreasing on [s,1), both full; Lebesgue; params: split (default 1/3)"),
];

pub fn map_catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<IntervalMap> {
    match name {
        "doubling" => Ok(IntervalMap::doubling()),
        "beta" => IntervalMap::beta(params.get("beta").copied().unwrap_or(1.5)),
        "gauss" => Ok(IntervalMap::gauss()),
        "piecewise_linear" => IntervalMap::piecewise_linear(params.get("split").copied().unwrap_or(1.0 / 3.0)),
        other => Err(Error::UnknownMap(other.to_string())),
    }
}

/// The forward orbit x, T x, ..., T^{n-1} x by direct iteration.
pub fn iterate(map: &IntervalMap, x: f64, n: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&x) {
        return Err(crate::error::invalid(format!("starting point {x} outside [0,1)")));
    }
    if n == 0 {
        return Err(crate::error::invalid("orbit length must be at least 1"));
    }
    let mut orbit = Vec::with_capacity(n);
    let mut y = x;
    for _ in 0..n {
        orbit.push(y);
        y = map.apply(y);
    }
    Ok(orbit)
}

/// A ν-typical orbit T^0 x, ..., T^n x of length n + 1, produced by running
/// the backward chain for n steps and reading it in reverse. Direct forward
/// iteration loses all precision after about 50 steps of an expanding map;
/// the reversed chain has exactly the law of the forward orbit.
#[derive(Debug, Clone)]
pub struct ReversedOrbit {
    pub points: Vec<f64>,
    /// `branches[i]` is the branch of T holding `points[i]`.
    pub branches: Vec<usize>,
}

pub fn typical_orbit(map: &IntervalMap, n: usize, rng: &mut Rng) -> ReversedOrbit {
    let mut states = Vec::with_capacity(n + 1);
    let mut branch_used = Vec::with_capacity(n);
    let mut y = map.sample_nu(rng);
    states.push(y);
    for _ in 0..n {
        let (k, x) = map.step_back(y, rng);
        branch_used.push(k);
        states.push(x);
        y = x;
    }
    states.reverse();
    branch_used.reverse();
    ReversedOrbit { points: states, branches: branch_used }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iterate_is_deterministic() {
        let m = IntervalMap::doubling();
        assert_eq!(iterate(&m, 0.3, 2).unwrap(), vec![0.3, 0.6]);
        assert!(iterate(&m, 1.0, 2).is_err());
    }

    #[test]
    fn typical_orbit_is_an_orbit() {
        let m = IntervalMap::beta(1.5).unwrap();
        let mut rng = crate::rng::from_seed(11);
        let o = typical_orbit(&m, 500, &mut rng);
        for i in 0..500 {
            assert!((m.apply(o.points[i]) - o.points[i + 1]).abs() < 1e-12);
            assert_eq!(m.branch_index(o.points[i]), o.branches[i]);
        }
    }
}
