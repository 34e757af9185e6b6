use crate::error::{invalid, Result};
use crate::numerics::median;
use crate::rng;
use crate::systems::{typical_orbit, IntervalMap, Observable};

pub const LIL_FIRST_CHECKPOINT: usize = 16;

#[derive(Debug, Clone)]
pub struct LilReport {
    pub n_max: usize,
    pub sigma: f64,
    /// 2^4, 2^5, …, up to n_max.
    pub checkpoints: Vec<usize>,
    /// |S_n|/√(2σ²n log log n) at each checkpoint.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Max ratio over n ∈ (n_max/2, n_max].
    pub final_octave: f64,
}

impl LilReport {
    /// Last checkpoint ratio below twice the median of the earlier ones.
    pub fn non_explosive(&self) -> bool {
        match self.ratios.split_last() {
            Some((last, earlier)) if !earlier.is_empty() => *last <= 2.0 * median(earlier),
            _ => true,
        }
    }
}

fn envelope(sigma: f64, n: usize) -> f64 {
    let nf = n as f64;
    (2.0 * sigma * sigma * nf * nf.ln().ln()).sqrt()
}

/// With σ = 0 the envelope vanishes; sums at rounding level count as 0.
fn ratio(s: f64, sigma: f64, n: usize) -> f64 {
    if sigma > 0.0 {
        s.abs() / envelope(sigma, n)
    } else if s.abs() <= 1e-9 * n as f64 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn lil_envelope(map: &IntervalMap, f: &Observable, n_max: usize, sigma: f64, seed: u64) -> Result<LilReport> {
    if n_max < 1 << 16 {
        return Err(invalid(format!("lil orbit length {n_max} below 2^16")));
    }
    if !(sigma >= 0.0) {
        return Err(invalid(format!("sigma = {sigma}")));
    }
    let mut r = rng::from_seed(seed);
    let orbit = typical_orbit(map, n_max - 1, &mut r);
    let nu = f.nu_mean(map);
    let mut checkpoints = Vec::new();
    let mut ratios = Vec::new();
    let mut next = LIL_FIRST_CHECKPOINT;
    let mut s = 0.0;
    let mut final_octave = 0.0f64;
    for (i, x) in orbit.points.iter().enumerate() {
        s += f.eval(*x) - nu;
        let n = i + 1;
        if n > n_max / 2 && n >= LIL_FIRST_CHECKPOINT {
            final_octave = final_octave.max(ratio(s, sigma, n));
        }
        if n == next {
            checkpoints.push(n);
            ratios.push(ratio(s, sigma, n));
            next *= 2;
        }
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(LilReport { n_max, sigma, checkpoints, ratios, max_ratio, final_octave })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gives_zero_ratios() {
        let map = IntervalMap::doubling();
        let r = lil_envelope(&map, &Observable::constant(3.0), 1 << 16, 0.0, 1).unwrap();
        assert_eq!(r.checkpoints.len(), 13);
        assert!(r.ratios.iter().all(|x| *x == 0.0));
        assert_eq!(r.final_octave, 0.0);
    }

    #[test]
    fn short_orbit_refused() {
        let map = IntervalMap::doubling();
        assert!(lil_envelope(&map, &Observable::identity(), 1000, 0.5, 1).is_err());
    }
}
