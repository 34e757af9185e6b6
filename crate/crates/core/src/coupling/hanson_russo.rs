//! Increment modulus of a Brownian path over windows of length a.

use std::collections::VecDeque;

use super::brownian::BrownianGrid;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HansonRussoReport {
    pub window: f64,
    pub horizon: f64,
    pub dt: f64,
    /// sup over grid t ≤ T and s ≤ a of
    /// |B_{t+s} − B_t| / (2a(log((t+a)/a) + log log a))^{1/2}.
    pub sup_ratio: f64,
    pub argmax_time: f64,
}

/// Sliding maxima of `v` over windows [i, i + w], i = 0..=len − 1 − w.
fn sliding(v: &[f64], w: usize, better: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::with_capacity(v.len() - w);
    for j in 0..v.len() {
        while let Some(&b) = dq.back() {
            if better(v[j], v[b]) || v[j] == v[b] {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(j);
        if j >= w {
            let i = j - w;
            while dq.front().is_some_and(|f| *f < i) {
                dq.pop_front();
            }
            out.push(v[*dq.front().unwrap()]);
        }
    }
    out
}

pub fn hanson_russo_check(bg: &mut BrownianGrid, window: f64, horizon: f64) -> Result<HansonRussoReport> {
    let dt = bg.dt();
    if window < 100.0 * dt {
        return Err(invalid(format!("window {window} must be at least 100 dt = {}", 100.0 * dt)));
    }
    if horizon < 10.0 * window {
        return Err(invalid(format!("horizon {horizon} must be at least 10 windows")));
    }
    if window <= std::f64::consts::E {
        return Err(invalid("window must exceed e so that log log a is positive"));
    }
    let w = (window / dt).round() as usize;
    let nt = (horizon / dt).round() as usize;
    let path = bg.steps(nt + w);
    let maxs = sliding(&path, w, |a, b| a > b);
    let mins = sliding(&path, w, |a, b| a < b);
    let lla = window.ln().ln();
    let mut best = (0.0f64, 0.0);
    for i in 0..=nt {
        let t = i as f64 * dt;
        let dev = (maxs[i] - path[i]).max(path[i] - mins[i]);
        let den = (2.0 * window * (((t + window) / window).ln() + lla)).sqrt();
        let r = dev / den;
        if r > best.0 {
            best = (r, t);
        }
    }
    Ok(HansonRussoReport { window, horizon, dt, sup_ratio: best.0, argmax_time: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_extrema() {
        let v = [1.0, 3.0, 2.0, 5.0, 4.0, 0.0];
        assert_eq!(sliding(&v, 2, |a, b| a > b), vec![3.0, 5.0, 5.0, 5.0]);
        assert_eq!(sliding(&v, 2, |a, b| a < b), vec![1.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn preconditions() {
        let mut bg = BrownianGrid::new(1, 1.0);
        assert!(hanson_russo_check(&mut bg, 50.0, 1e4).is_err());
        assert!(hanson_russo_check(&mut bg, 1e3, 5e3).is_err());
    }
}
