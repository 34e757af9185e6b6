use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::map::IntervalMap;
use super::quadrature::graded_integral;
use crate::error::{invalid, Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How grid functions built from an observable should be interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    Kinked,
    Step,
}

/// `coefficient · func` on `support` (closed), zero elsewhere; `func` is
/// monotone on the support.
#[derive(Clone)]
pub struct MonPiece {
    pub coefficient: f64,
    pub support: (f64, f64),
    pub increasing: bool,
    pub func: RealFn,
}

impl MonPiece {
    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.support.0 && x <= self.support.1 {
            self.coefficient * (self.func)(x)
        } else {
            0.0
        }
    }

    /// Unweighted piece value (the monotone function itself, zero outside).
    pub fn raw(&self, x: f64) -> f64 {
        if x >= self.support.0 && x <= self.support.1 {
            (self.func)(x)
        } else {
            0.0
        }
    }
}

#[derive(Clone)]
pub struct MonCombo {
    pub pieces: Vec<MonPiece>,
    pub p: f64,
    /// M with ν(|f_ℓ|^p) ≤ M^p for every piece.
    pub moment_bound: f64,
}

#[derive(Clone)]
pub enum Regularity {
    Holder { alpha: f64, constant: f64 },
    BoundedVariation { variation: f64 },
    MonCombo(MonCombo),
}

impl fmt::Debug for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::Holder { alpha, constant } => write!(f, "Holder({alpha}, {constant})"),
            Regularity::BoundedVariation { variation } => write!(f, "BV({variation})"),
            Regularity::MonCombo(c) => write!(f, "MonCombo(pieces={}, p={}, M={})", c.pieces.len(), c.p, c.moment_bound),
        }
    }
}

/// A real function on [0,1] with a regularity tag.
#[derive(Clone)]
pub struct Observable {
    name: String,
    func: RealFn,
    tag: Regularity,
    smoothness: Smoothness,
    breaks: Vec<f64>,
    singular_at_zero: bool,
    sup: Option<f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).field("tag", &self.tag).finish()
    }
}

/// Names accepted by [`Observable::catalog`].
pub const OBSERVABLES: &[(&str, &str)] = &[
    ("identity_centered", "f(x) = x; BV(1)"),
    ("holder", "f(x) = |x - 1/2|^alpha; Holder(alpha, 1); params: alpha in (0,1]"),
    ("indicator_halfline", "f(x) = 1{x <= t}; MonCombo; params: t in (0,1), p (default 4)"),
    ("power_singularity", "f(x) = x^(-a); MonCombo; params: a in (0,1/2), p in (2,4] with p < 1/a"),
    ("bv_example", "f(x) = 1{1/4 <= x < 3/4} + x/2; BV(5/2)"),
    ("constant", "f(x) = c; BV(0); params: c (default 1)"),
];

fn param(params: &BTreeMap<String, f64>, key: &str) -> Option<f64> {
    params.get(key).copied()
}

impl Observable {
    pub fn new(name: impl Into<String>, func: RealFn, tag: Regularity, smoothness: Smoothness) -> Self {
        Observable { name: name.into(), func, tag, smoothness, breaks: Vec::new(), singular_at_zero: false, sup: None }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn with_sup(mut self, sup: f64) -> Self {
        self.sup = Some(sup);
        self
    }

    pub fn singular(mut self) -> Self {
        self.singular_at_zero = true;
        self
    }

    pub fn identity() -> Self {
        Observable::new("identity_centered", Arc::new(|x| x), Regularity::BoundedVariation { variation: 1.0 }, Smoothness::Smooth)
            .with_sup(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Observable::new(format!("constant({c})"), Arc::new(move |_| c), Regularity::BoundedVariation { variation: 0.0 }, Smoothness::Smooth)
            .with_sup(c.abs())
    }

    pub fn holder(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("holder exponent must lie in (0,1], got {alpha}")));
        }
        Ok(Observable::new(
            format!("holder({alpha})"),
            Arc::new(move |x: f64| (x - 0.5).abs().powf(alpha)),
            Regularity::Holder { alpha, constant: 1.0 },
            Smoothness::Kinked,
        )
        .with_sup(0.5f64.powf(alpha)))
    }

    pub fn indicator_halfline(t: f64, p: f64, map: &IntervalMap) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(invalid(format!("threshold must lie in (0,1), got {t}")));
        }
        check_p(p)?;
        let piece = MonPiece { coefficient: 1.0, support: (0.0, t), increasing: true, func: Arc::new(|_| 1.0) };
        let m = map.nu_cdf(t).powf(1.0 / p);
        Ok(Observable::new(
            format!("indicator_halfline({t})"),
            Arc::new(move |x| if x <= t { 1.0 } else { 0.0 }),
            Regularity::MonCombo(MonCombo { pieces: vec![piece], p, moment_bound: m }),
            Smoothness::Step,
        )
        .with_breaks(vec![t])
        .with_sup(1.0))
    }

    pub fn power_singularity(a: f64, p: Option<f64>, map: &IntervalMap) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) {
            return Err(invalid(format!("power_singularity needs a in (0, 1/2) for square integrability, got {a}")));
        }
        let p = p.unwrap_or(if 1.0 / a > 4.0 { 4.0 } else { 0.5 * (2.0 + 1.0 / a) });
        check_p(p)?;
        if p * a >= 1.0 {
            return Err(invalid(format!("power_singularity({a}) has no moment of order {p}; need p < 1/a")));
        }
        let f = move |x: f64| x.max(1e-300).powf(-a);
        let moment = graded_integral(map, |x| f(x).powf(p));
        let piece = MonPiece { coefficient: 1.0, support: (0.0, 1.0), increasing: false, func: Arc::new(f) };
        Ok(Observable::new(
            format!("power_singularity({a})"),
            Arc::new(f),
            Regularity::MonCombo(MonCombo { pieces: vec![piece], p, moment_bound: moment.powf(1.0 / p) }),
            Smoothness::Smooth,
        )
        .singular())
    }

    pub fn bv_example() -> Self {
        Observable::new(
            "bv_example",
            Arc::new(|x| if (0.25..0.75).contains(&x) { 1.0 + 0.5 * x } else { 0.5 * x }),
            Regularity::BoundedVariation { variation: 2.5 },
            Smoothness::Kinked,
        )
        .with_breaks(vec![0.25, 0.75])
        .with_sup(1.5)
    }

    /// f = g − g∘T for a bounded g with variation bound `g_variation`.
    pub fn coboundary(g: RealFn, g_variation: f64, g_sup: f64, map: &IntervalMap) -> Result<Self> {
        let branches = map
            .branch_count()
            .ok_or_else(|| invalid("coboundary observables need finitely many branches"))?;
        let m = map.clone();
        let gg = g.clone();
        Ok(Observable::new(
            "coboundary",
            Arc::new(move |x| gg(x) - gg(m.apply(x))),
            Regularity::BoundedVariation { variation: g_variation * (1.0 + branches as f64) },
            Smoothness::Kinked,
        )
        .with_breaks(map.branch_ends(0))
        .with_sup(2.0 * g_sup))
    }

    /// Monotone combination built directly from pieces.
    pub fn from_pieces(name: impl Into<String>, pieces: Vec<MonPiece>, p: f64, map: &IntervalMap, smoothness: Smoothness) -> Result<Self> {
        check_p(p)?;
        let total: f64 = pieces.iter().map(|pc| pc.coefficient.abs()).sum();
        if total > 1.0 + 1e-12 {
            return Err(invalid(format!("coefficients must satisfy sum |a| <= 1, got {total}")));
        }
        let moment = pieces
            .iter()
            .map(|pc| graded_integral(map, |x| pc.raw(x).abs().powf(p)))
            .fold(0.0, f64::max);
        let mut breaks = Vec::new();
        for pc in &pieces {
            breaks.push(pc.support.0);
            breaks.push(pc.support.1);
        }
        let ps = pieces.clone();
        let sup = pieces.iter().try_fold(0.0, |acc, pc| {
            let a = pc.raw(pc.support.0.max(1e-300)).abs();
            let b = pc.raw(pc.support.1).abs();
            let m = a.max(b);
            if m.is_finite() && m < 1e200 {
                Some(acc + pc.coefficient.abs() * m)
            } else {
                None
            }
        });
        let mut obs = Observable::new(
            name,
            Arc::new(move |x| ps.iter().map(|pc| pc.eval(x)).sum()),
            Regularity::MonCombo(MonCombo { pieces, p, moment_bound: moment.powf(1.0 / p) }),
            smoothness,
        )
        .with_breaks(breaks);
        match sup {
            Some(s) => obs.sup = Some(s),
            None => obs.singular_at_zero = true,
        }
        Ok(obs)
    }

    pub fn catalog(name: &str, params: &BTreeMap<String, f64>, map: &IntervalMap) -> Result<Self> {
        match name {
            "identity_centered" | "identity" => Ok(Observable::identity()),
            "holder" => Observable::holder(param(params, "alpha").unwrap_or(0.5)),
            "indicator_halfline" => Observable::indicator_halfline(
                param(params, "t").unwrap_or(0.5),
                param(params, "p").unwrap_or(4.0),
                map,
            ),
            "power_singularity" => {
                Observable::power_singularity(param(params, "a").unwrap_or(0.3), param(params, "p"), map)
            }
            "bv_example" => Ok(Observable::bv_example()),
            "constant" => Ok(Observable::constant(param(params, "c").unwrap_or(1.0))),
            other => Err(Error::UnknownObservable(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> &Regularity {
        &self.tag
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_singular(&self) -> bool {
        self.singular_at_zero
    }

    /// sup |f| when known to be finite.
    pub fn sup(&self) -> Option<f64> {
        self.sup
    }

    pub fn is_bounded(&self) -> bool {
        self.sup.is_some()
    }

    pub fn func(&self) -> RealFn {
        self.func.clone()
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    pub fn mon_combo(&self) -> Option<&MonCombo> {
        match &self.tag {
            Regularity::MonCombo(c) => Some(c),
            _ => None,
        }
    }

    /// ν(g(f)) using the quadrature appropriate for this observable.
    pub fn nu_of(&self, map: &IntervalMap, mut g: impl FnMut(f64) -> f64) -> f64 {
        if self.singular_at_zero {
            graded_integral(map, |x| g(self.eval(x)))
        } else {
            map.quadrature(&self.breaks).integrate(|x| g(self.eval(x)))
        }
    }

    pub fn nu_mean(&self, map: &IntervalMap) -> f64 {
        self.nu_of(map, |v| v)
    }

    /// ‖f‖_{p,ν}.
    pub fn lp_norm(&self, map: &IntervalMap, p: f64) -> f64 {
        self.nu_of(map, |v| v.abs().powf(p)).powf(1.0 / p)
    }

    /// ‖f − ν(f)‖_{p,ν}.
    pub fn centered_lp_norm(&self, map: &IntervalMap, p: f64) -> f64 {
        let m = self.nu_mean(map);
        self.nu_of(map, |v| (v - m).abs().powf(p)).powf(1.0 / p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 2.0 && p <= 4.0 {
        Ok(())
    } else {
        Err(invalid(format!("moment order p must lie in (2,4], got {p}")))
    }
}

/// Checks the monotone-combination requirements: Σ|a| ≤ 1, each piece
/// monotone on its support (sampled), moment bound respected.
pub fn check_mon_combo(obs: &Observable, map: &IntervalMap, samples: usize) -> std::result::Result<(), String> {
    let combo = obs.mon_combo().ok_or_else(|| "not a monotone combination".to_string())?;
    let total: f64 = combo.pieces.iter().map(|p| p.coefficient.abs()).sum();
    if total > 1.0 + 1e-12 {
        return Err(format!("sum of |coefficients| = {total} > 1"));
    }
    for (i, pc) in combo.pieces.iter().enumerate() {
        let (lo, hi) = pc.support;
        let mut prev = None;
        for s in 0..samples {
            let x = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
            let v = (pc.func)(x);
            if let Some(pv) = prev {
                let bad = if pc.increasing { v < pv } else { v > pv };
                if bad {
                    return Err(format!("piece {i} is not monotone near {x}"));
                }
            }
            prev = Some(v);
        }
        let outside = [lo - 1e-9, hi + 1e-9];
        for x in outside {
            if (0.0..=1.0).contains(&x) && pc.eval(x) != 0.0 {
                return Err(format!("piece {i} is nonzero outside its support at {x}"));
            }
        }
        let moment = graded_integral(map, |x| pc.raw(x).abs().powf(combo.p));
        if moment > combo.moment_bound.powf(combo.p) * (1.0 + 1e-6) + 1e-12 {
            return Err(format!("piece {i} moment {moment} exceeds M^p"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_singularity_moment_bound() {
        let m = IntervalMap::doubling();
        let f = Observable::power_singularity(0.3, Some(3.0), &m).unwrap();
        let c = f.mon_combo().unwrap();
        assert!((c.moment_bound - 10f64.powf(1.0 / 3.0)).abs() < 1e-5);
        check_mon_combo(&f, &m, 1000).unwrap();
    }

    #[test]
    fn indicator_moment_bound() {
        let m = IntervalMap::doubling();
        for p in [2.5, 3.0, 4.0] {
            let f = Observable::indicator_halfline(0.5, p, &m).unwrap();
            assert!((f.mon_combo().unwrap().moment_bound - 2f64.powf(-1.0 / p)).abs() < 1e-12);
            check_mon_combo(&f, &m, 1000).unwrap();
        }
    }

    #[test]
    fn power_singularity_rejects_heavy_tails() {
        let m = IntervalMap::doubling();
        assert!(Observable::power_singularity(0.5, None, &m).is_err());
        assert!(Observable::power_singularity(0.3, Some(4.0), &m).is_err());
    }

    #[test]
    fn identity_tag() {
        assert!(matches!(Observable::identity().tag(), Regularity::BoundedVariation { variation } if *variation == 1.0));
    }
}
