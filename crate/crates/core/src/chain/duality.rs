//! Forward orbits from ν against reversed chain paths.

use crate::error::{invalid, Result};
use crate::rng;
use crate::stats::ks::{critical_two_sample, ks_pvalue, ks_two_sample, two_sample_size};
use crate::systems::IntervalMap;

pub const MAX_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DualityEntry {
    /// `T^i` for a coordinate, `T^i+pi*T^j` for a pair projection.
    pub label: String,
    pub ks: f64,
    pub p_value: f64,
    pub critical: f64,
}

#[derive(Debug, Clone)]
pub struct DualityReport {
    pub window: usize,
    pub reps: usize,
    pub entries: Vec<DualityEntry>,
}

impl DualityReport {
    pub fn all_below_critical(&self) -> bool {
        self.entries.iter().all(|e| e.ks < e.critical)
    }

    pub fn worst(&self) -> Option<&DualityEntry> {
        self.entries.iter().max_by(|a, b| (a.ks / a.critical).total_cmp(&(b.ks / b.critical)))
    }
}

/// Two samples laid out by coordinate: `forward[i][r]` = T^{i+1}(x_r) with
/// x_r ~ ν, and `reversed[i][r]` = Y_{n−i} of an independent chain path.
#[derive(Debug, Clone)]
pub struct DualitySamples {
    pub forward: Vec<Vec<f64>>,
    pub reversed: Vec<Vec<f64>>,
}

pub fn duality_samples(map: &IntervalMap, window: usize, reps: usize, seed: u64) -> Result<DualitySamples> {
    if window == 0 || window > MAX_WINDOW {
        return Err(invalid(format!("duality window must lie in 1..={MAX_WINDOW}, got {window}")));
    }
    let mut fwd_rng = rng::substream(seed, 0, 0);
    let mut rev_rng = rng::substream(seed, 0, 1);
    let mut forward = vec![Vec::with_capacity(reps); window];
    let mut reversed = vec![Vec::with_capacity(reps); window];
    let mut path = vec![0.0; window + 1];
    for _ in 0..reps {
        let mut x = map.sample_nu(&mut fwd_rng);
        for coord in forward.iter_mut() {
            x = map.apply(x);
            coord.push(x);
        }
        path[0] = map.sample_nu(&mut rev_rng);
        for k in 1..=window {
            path[k] = map.step_back(path[k - 1], &mut rev_rng).1;
        }
        for (i, coord) in reversed.iter_mut().enumerate() {
            coord.push(path[window - i]);
        }
    }
    Ok(DualitySamples { forward, reversed })
}

/// KS comparison of every coordinate and every pair projection x + πy.
pub fn duality_test(map: &IntervalMap, window: usize, reps: usize, seed: u64) -> Result<DualityReport> {
    if reps < 10_000 {
        return Err(invalid(format!("duality test needs at least 10^4 replicas, got {reps}")));
    }
    let s = duality_samples(map, window, reps, seed)?;
    let size = two_sample_size(reps, reps);
    let critical = critical_two_sample(reps, reps);
    let entry = |label: String, a: &[f64], b: &[f64]| {
        let ks = ks_two_sample(a, b);
        DualityEntry { label, ks, p_value: ks_pvalue(ks, size), critical }
    };
    let mut entries = Vec::new();
    for i in 0..window {
        entries.push(entry(format!("T^{}", i + 1), &s.forward[i], &s.reversed[i]));
    }
    let project = |c: &[Vec<f64>], i: usize, j: usize| -> Vec<f64> {
        c[i].iter().zip(&c[j]).map(|(x, y)| x + std::f64::consts::PI * y).collect()
    };
    for i in 0..window {
        for j in i + 1..window {
            let a = project(&s.forward, i, j);
            let b = project(&s.reversed, i, j);
            entries.push(entry(format!("T^{}+pi*T^{}", i + 1, j + 1), &a, &b));
        }
    }
    Ok(DualityReport { window, reps, entries })
}
