use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::{self, Rng};

/// Bridge crossing probabilities below e^{-20} are treated as zero.
const BRIDGE_CUTOFF: f64 = 10.0;

/// A Brownian path simulated forward in time on steps of a chosen size.
///
/// Exits from brackets are detected on the grid, by a sign change (with
/// linear time interpolation) or by a Brownian-bridge crossing between two
/// grid values. The path can also be read at a sorted list of query times;
/// each query is filled by bridge interpolation as the path passes it.
#[derive(Debug, Clone)]
pub struct BrownianGrid {
    rng: Rng,
    dt: f64,
    time: f64,
    value: f64,
    queries: Vec<f64>,
    resolved: Vec<f64>,
}

impl BrownianGrid {
    pub fn new(seed: u64, dt: f64) -> Self {
        Self::with_rng(rng::from_seed(seed), dt)
    }

    pub fn with_rng(rng: Rng, dt: f64) -> Self {
        assert!(dt > 0.0, "time step must be positive");
        BrownianGrid { rng, dt, time: 0.0, value: 0.0, queries: Vec::new(), resolved: Vec::new() }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        assert!(dt > 0.0, "time step must be positive");
        self.dt = dt;
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Move to (time, value) without simulating; for setting a start.
    pub fn reset(&mut self, time: f64, value: f64) {
        self.time = time;
        self.value = value;
        self.resolved.clear();
    }

    /// Snap the current value (used to land exactly on an atom).
    pub(crate) fn reset_value(&mut self, value: f64) {
        self.value = value;
    }

    /// Times at which the path should be recorded; must be sorted and not
    /// earlier than the current time.
    pub fn set_queries(&mut self, times: Vec<f64>) {
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        self.queries = times;
        self.resolved.clear();
    }

    /// Path values at the query times resolved so far.
    pub fn resolved(&self) -> &[f64] {
        &self.resolved
    }

    /// Simulate freely past every outstanding query (exact Gaussian
    /// increments) and return all query values.
    pub fn finish_queries(&mut self) -> Vec<f64> {
        while self.resolved.len() < self.queries.len() {
            let q = self.queries[self.resolved.len()];
            if q.is_finite() && q > self.time {
                self.value += (q - self.time).sqrt() * self.normal();
                self.time = q;
            }
            self.resolved.push(self.value);
        }
        self.resolved.clone()
    }

    /// Exact increments over `n` grid steps, starting from the current state.
    pub fn steps(&mut self, n: usize) -> Vec<f64> {
        let sd = self.dt.sqrt();
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.value);
        for _ in 0..n {
            self.value += sd * self.normal();
            self.time += self.dt;
            out.push(self.value);
        }
        out
    }

    fn resolve_until(&mut self, t0: f64, w0: f64, t1: f64, w1: f64) {
        while let Some(&q) = self.queries.get(self.resolved.len()) {
            if q > t1 {
                break;
            }
            let span = t1 - t0;
            let v = if span <= 0.0 || q <= t0 {
                w0
            } else {
                let s = (q - t0) / span;
                let mean = w0 + s * (w1 - w0);
                let var = (q - t0) * (t1 - q) / span;
                mean + var.max(0.0).sqrt() * self.normal()
            };
            self.resolved.push(v);
        }
    }

    /// Run until the path leaves (lo, hi); returns true for an exit at hi.
    /// The state is left exactly at the barrier.
    pub fn run_to_exit(&mut self, lo: f64, hi: f64) -> bool {
        debug_assert!(lo < self.value && self.value < hi);
        let dt = self.dt;
        let sd = dt.sqrt();
        let near = BRIDGE_CUTOFF * dt;
        let (mut t, mut w) = (self.time, self.value);
        loop {
            let w1 = w + sd * self.normal();
            let t1 = t + dt;
            let exit = if w1 >= hi {
                Some((t + dt * (hi - w) / (w1 - w), true))
            } else if w1 <= lo {
                Some((t + dt * (w - lo) / (w - w1), false))
            } else {
                let dh = (hi - w) * (hi - w1);
                let dl = (w - lo) * (w1 - lo);
                if dh < near && self.rng.random::<f64>() < (-2.0 * dh / dt).exp() {
                    Some((t + 0.5 * dt, true))
                } else if dl < near && self.rng.random::<f64>() < (-2.0 * dl / dt).exp() {
                    Some((t + 0.5 * dt, false))
                } else {
                    None
                }
            };
            match exit {
                Some((te, up)) => {
                    let barrier = if up { hi } else { lo };
                    self.resolve_until(t, w, te, barrier);
                    self.time = te;
                    self.value = barrier;
                    return up;
                }
                None => {
                    self.resolve_until(t, w, t1, w1);
                    t = t1;
                    w = w1;
                }
            }
        }
    }

    /// Exit from (lo, hi) conditioned on the side. Symmetric brackets use a
    /// reflection of the stage path about its start; others use rejection.
    pub fn run_to_exit_at(&mut self, lo: f64, hi: f64, want_hi: bool) {
        let (t0, w0, q0) = (self.time, self.value, self.resolved.len());
        let symmetric = ((hi - w0) - (w0 - lo)).abs() <= 1e-12 * (hi - lo);
        loop {
            let up = self.run_to_exit(lo, hi);
            if up == want_hi {
                return;
            }
            if symmetric {
                self.value = if want_hi { hi } else { lo };
                for v in &mut self.resolved[q0..] {
                    *v = 2.0 * w0 - *v;
                }
                return;
            }
            self.time = t0;
            self.value = w0;
            self.resolved.truncate(q0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_have_the_grid_variance() {
        let mut bg = BrownianGrid::new(1, 0.01);
        let path = bg.steps(200_000);
        let inc: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
        let m = crate::numerics::mean(&inc);
        let v = crate::numerics::variance(&inc);
        assert!(m.abs() < 4.0 * (0.01f64 / 200_000.0).sqrt());
        assert!((v / 0.01 - 1.0).abs() < 0.015);
    }

    #[test]
    fn exit_probabilities_follow_the_gamblers_ruin() {
        let mut bg = BrownianGrid::new(2, 1e-3);
        let mut ups = 0;
        let n = 20_000;
        for _ in 0..n {
            bg.reset(0.0, 0.0);
            if bg.run_to_exit(-0.25, 0.75) {
                ups += 1;
            }
        }
        let p = ups as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn queries_are_filled_in_order() {
        let mut bg = BrownianGrid::new(3, 1e-2);
        bg.set_queries(vec![0.0, 0.5, 2.0, 3.0]);
        bg.run_to_exit(-1.0, 1.0);
        let vals = bg.finish_queries();
        assert_eq!(vals.len(), 4);
        assert_eq!(vals[0], 0.0);
    }
}
