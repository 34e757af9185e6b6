//! Invariant densities of the catalog maps, with closed-form distribution
//! functions so cell masses are exact.

use std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Lebesgue,
    /// 1 / ((1 + x) ln 2).
    Gauss,
    Parry(Parry),
}

/// Parry density of the β-transformation:
/// h(x) = (1/C) Σ_k β^{-k} 1{x < t_k}, t_0 = 1, t_{k+1} = β t_k mod 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Parry {
    pub beta: f64,
    cuts: Vec<f64>,
    coeffs: Vec<f64>,
}

impl Parry {
    pub fn new(beta: f64) -> Self {
        let mut cuts = Vec::new();
        let mut raw = Vec::new();
        let mut t = 1.0f64;
        let mut scale = 1.0f64;
        while scale > 1e-18 && t > 0.0 {
            cuts.push(t);
            raw.push(scale);
            let bt = beta * t;
            t = bt - bt.floor();
            scale /= beta;
        }
        let norm: f64 = cuts.iter().zip(&raw).map(|(t, c)| t * c).sum();
        let coeffs = raw.into_iter().map(|c| c / norm).collect();
        Parry { beta, cuts, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cuts.iter().zip(&self.coeffs).filter(|(t, _)| x < **t).map(|(_, c)| c).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.cuts.iter().zip(&self.coeffs).map(|(t, c)| c * x.min(*t)).sum()
    }

    /// Jump locations inside (0, 1).
    pub fn jumps(&self) -> Vec<f64> {
        self.jumps_above(0.0)
    }

    /// Jump locations whose jump size exceeds `floor`.
    pub fn jumps_above(&self, floor: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .cuts
            .iter()
            .zip(&self.coeffs)
            .filter(|(t, c)| **t > 0.0 && **t < 1.0 && **c > floor)
            .map(|(t, _)| *t)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

impl Density {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Lebesgue => 1.0,
            Density::Gauss => 1.0 / ((1.0 + x) * LN_2),
            Density::Parry(p) => p.eval(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Density::Lebesgue => x,
            Density::Gauss => x.ln_1p() / LN_2,
            Density::Parry(p) => p.cdf(x),
        }
    }

    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    /// Points in (0,1) where the density is discontinuous.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            Density::Parry(p) => p.jumps(),
            _ => Vec::new(),
        }
    }

    pub fn jumps_above(&self, floor: f64) -> Vec<f64> {
        match self {
            Density::Parry(p) => p.jumps_above(floor),
            _ => Vec::new(),
        }
    }

    pub fn infimum(&self) -> f64 {
        match self {
            Density::Lebesgue => 1.0,
            Density::Gauss => 1.0 / (2.0 * LN_2),
            Density::Parry(p) => p.coeffs.first().copied().unwrap_or(0.0),
        }
    }
}
