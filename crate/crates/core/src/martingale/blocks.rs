//! Dyadic blocks with level-dependent truncation of monotone pieces.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::systems::{MonPiece, Observable, Regularity, Smoothness};

/// c(j) = 2^{j/p} j^{−2/p}; level 0 reuses c(1).
pub fn cutoff(j: usize, p: f64) -> f64 {
    let j = j.max(1) as f64;
    2f64.powf(j / p) * j.powf(-2.0 / p)
}

/// Dyadic level of an index: ℓ ∈ {2^j + 1, …, 2^{j+1}} has level j; ℓ = 1
/// joins level 0.
pub fn level_of(ell: usize) -> usize {
    if ell <= 2 {
        0
    } else {
        (usize::BITS - 1 - (ell - 1).leading_zeros()) as usize
    }
}

/// x·1_{|x| ≤ c}.
pub fn truncate(x: f64, c: f64) -> f64 {
    if x.abs() <= c {
        x
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct BlockLevel {
    pub level: usize,
    pub cutoff: f64,
    /// Σ a_k g_j ∘ f_k.
    pub observable: Observable,
    /// max_k sup |g_j ∘ f_k| over a fine grid of the supports.
    pub piece_sup: f64,
    /// Whether truncation changed any piece at this level.
    pub active: bool,
}

#[derive(Debug, Clone)]
pub struct BlockScheme {
    pub p: f64,
    pub levels: Vec<BlockLevel>,
}

impl BlockScheme {
    pub fn level(&self, j: usize) -> &BlockLevel {
        &self.levels[j.min(self.levels.len() - 1)]
    }

    /// Level serving index ℓ.
    pub fn for_index(&self, ell: usize) -> &BlockLevel {
        self.level(level_of(ell))
    }
}

/// Point in the support where a monotone piece crosses |value| = c, if any.
fn crossing(piece: &MonPiece, c: f64) -> Option<f64> {
    let (lo, hi) = piece.support;
    let lo = lo.max(1e-300);
    let above = |x: f64| (piece.func)(x).abs() > c;
    let (a, b) = (above(lo), above(hi));
    if a == b {
        return None;
    }
    let (mut l, mut r) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (l + r);
        if above(m) == a {
            l = m;
        } else {
            r = m;
        }
    }
    Some(0.5 * (l + r))
}

fn piece_sup(piece: &MonPiece, c: f64) -> f64 {
    let (lo, hi) = piece.support;
    let n = 4096;
    let mut best: f64 = 0.0;
    for i in 0..=n {
        let x = (lo + (hi - lo) * i as f64 / n as f64).max(1e-300);
        best = best.max(truncate((piece.func)(x), c).abs());
    }
    if let Some(x) = crossing(piece, c) {
        for y in [x * (1.0 - 1e-15), x, x * (1.0 + 1e-15)] {
            best = best.max(truncate((piece.func)(y), c).abs());
        }
    }
    best
}

/// Truncated observables for levels 0..=max_level.
pub fn build_blocks(f: &Observable, p: f64, max_level: usize) -> Result<BlockScheme> {
    let Regularity::MonCombo(combo) = f.tag() else {
        return Err(Error::NotMonotoneCombination(f.name().to_string()));
    };
    if !(p > 2.0 && p <= 4.0) {
        return Err(invalid(format!("block scheme needs p in (2,4], got {p}")));
    }
    let mut levels = Vec::with_capacity(max_level + 1);
    for j in 0..=max_level {
        let c = cutoff(j, p);
        let pieces: Vec<MonPiece> = combo.pieces.clone();
        let mut breaks = f.breaks().to_vec();
        let mut active = false;
        let mut sup: f64 = 0.0;
        for pc in &pieces {
            if let Some(x) = crossing(pc, c) {
                breaks.push(x);
                active = true;
            } else if (pc.func)(pc.support.0.max(1e-300)).abs() > c {
                active = true;
            }
            sup = sup.max(piece_sup(pc, c));
        }
        let ps = pieces.clone();
        let bound: f64 = pieces.iter().map(|pc| pc.coefficient.abs()).sum::<f64>() * c;
        let func = Arc::new(move |x: f64| ps.iter().map(|pc| pc.coefficient * truncate(pc.raw(x), c)).sum());
        let smoothness = if active { Smoothness::Kinked } else { f.smoothness() };
        let observable = if active {
            Observable::new(format!("{}|c={c:.6}", f.name()), func, f.tag().clone(), smoothness)
                .with_breaks(breaks)
                .with_sup(bound)
        } else {
            f.clone()
        };
        levels.push(BlockLevel { level: j, cutoff: c, observable, piece_sup: sup, active });
    }
    Ok(BlockScheme { p, levels })
}
