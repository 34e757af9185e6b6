use crate::error::{invalid, Result};
use crate::rng::{self, Rng};
use crate::systems::IntervalMap;

/// A path Y_0, …, Y_n of the backward chain with kernel K.
#[derive(Debug, Clone)]
pub struct ChainPath {
    pub states: Vec<f64>,
    /// `branches[k]` is the inverse branch used to go from Y_k to Y_{k+1}.
    pub branches: Vec<usize>,
    pub seed: u64,
}

/// A step where T(Y_{k+1}) misses Y_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDefect {
    pub step: usize,
    pub defect: f64,
    pub tolerance: f64,
}

impl ChainPath {
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.states.len() < 2
    }

    /// Largest |T(Y_{k+1}) − Y_k| over the path.
    pub fn max_step_defect(&self, map: &IntervalMap) -> f64 {
        self.states.windows(2).map(|w| (map.apply(w[1]) - w[0]).abs()).fold(0.0, f64::max)
    }

    /// Check T(Y_{k+1}) = Y_k up to 1e-12, relaxed by the conditioning
    /// |T'(x)|·x of the forward map at the sampled point.
    pub fn check_steps(&self, map: &IntervalMap) -> std::result::Result<(), StepDefect> {
        for (step, w) in self.states.windows(2).enumerate() {
            let x = w[1];
            let defect = (map.apply(x) - w[0]).abs();
            let tolerance = 1e-12 * (1.0 + map.derivative(x) * x);
            if defect > tolerance {
                return Err(StepDefect { step, defect, tolerance });
            }
        }
        Ok(())
    }
}

/// Y_0 ~ ν, then n backward steps.
pub fn sample_path(map: &IntervalMap, n: usize, seed: u64) -> Result<ChainPath> {
    let mut rng = rng::from_seed(seed);
    sample_path_with(map, n, seed, &mut rng)
}

/// As `sample_path`, drawing from a caller-owned stream; `seed` is recorded.
pub fn sample_path_with(map: &IntervalMap, n: usize, seed: u64, rng: &mut Rng) -> Result<ChainPath> {
    if n == 0 {
        return Err(invalid("chain path length must be at least 1"));
    }
    let mut states = Vec::with_capacity(n + 1);
    let mut branches = Vec::with_capacity(n);
    let mut y = map.sample_nu(rng);
    states.push(y);
    for _ in 0..n {
        let (k, x) = map.step_back(y, rng);
        states.push(x);
        branches.push(k);
        y = x;
    }
    Ok(ChainPath { states, branches, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_steps_are_halvings() {
        let map = IntervalMap::doubling();
        let p = sample_path(&map, 3, 5).unwrap();
        for (w, k) in p.states.windows(2).zip(&p.branches) {
            assert_eq!(w[1], (w[0] + *k as f64) / 2.0);
        }
        assert!(p.check_steps(&map).is_ok());
    }

    #[test]
    fn gauss_steps_invert_the_map() {
        let map = IntervalMap::gauss();
        let p = sample_path(&map, 10_000, 9).unwrap();
        assert!(p.check_steps(&map).is_ok());
    }

    #[test]
    fn zero_length_rejected() {
        assert!(sample_path(&IntervalMap::doubling(), 0, 1).is_err());
    }
}
