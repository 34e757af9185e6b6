use crate::error::{invalid, Result};
use crate::numerics::median;

/// Largest ratio of successive checkpoint medians still counted as shrinking.
pub const SHRINK_RATIO: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct ReverseSeriesReport {
    pub p: f64,
    pub horizon: usize,
    /// r = N/64, N/16, N/4.
    pub checkpoints: Vec<usize>,
    /// Median over replicas of max_{r≤m≤N} |Z_m − Z_N|.
    pub medians: Vec<f64>,
    pub shrinking: bool,
    pub all_zero: bool,
}

impl ReverseSeriesReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.medians.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// max_{m≥r} |Z_m − Z_N| for the partial sums Z_m = Σ_{k≤m} ξ_k.
pub fn tail_oscillation(xi: &[f64], r: usize) -> f64 {
    // Z_m − Z_N = −Σ_{m<k≤N} ξ_k, built from the end
    let mut tail = 0.0f64;
    let mut sup = 0.0f64;
    for x in xi[r.min(xi.len())..].iter().rev() {
        tail += x;
        sup = sup.max(tail.abs());
    }
    sup
}

/// Shrinking tails of Σ ξ_k over replicas, each replica one sequence
/// ξ_1..ξ_N (index k − 1).
pub fn reverse_series_check(replicas: &[Vec<f64>], p: f64) -> Result<ReverseSeriesReport> {
    if !(1.0..=2.0).contains(&p) {
        return Err(invalid(format!("p = {p} outside [1, 2]")));
    }
    let horizon = replicas.first().map(Vec::len).unwrap_or(0);
    if horizon < 64 || replicas.iter().any(|r| r.len() != horizon) {
        return Err(invalid("replicas must share one length of at least 64"));
    }
    let checkpoints = vec![horizon / 64, horizon / 16, horizon / 4];
    let medians: Vec<f64> = checkpoints
        .iter()
        .map(|r| median(&replicas.iter().map(|xi| tail_oscillation(xi, *r)).collect::<Vec<_>>()))
        .collect();
    let all_zero = medians.iter().all(|m| *m == 0.0);
    let shrinking = !all_zero && medians.windows(2).all(|w| w[1] <= SHRINK_RATIO * w[0]);
    Ok(ReverseSeriesReport { p, horizon, checkpoints, medians, shrinking, all_zero })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillation_of_known_tail() {
        // Z = 1, 3, 2, 2; Z_4 = 2
        let xi = [1.0, 2.0, -1.0, 0.0];
        assert_eq!(tail_oscillation(&xi, 1), 1.0);
        assert_eq!(tail_oscillation(&xi, 2), 1.0);
        assert_eq!(tail_oscillation(&xi, 3), 0.0);
    }

    #[test]
    fn zero_increments() {
        let r = reverse_series_check(&vec![vec![0.0; 256]; 5], 2.0).unwrap();
        assert!(r.all_zero && !r.shrinking);
    }
}
