use super::brownian::BrownianGrid;
use super::embed::{embed_conditioned, embed_increment};
use crate::error::{invalid, Result};
use crate::martingale::{Atom, ConditionalLaw, DiscreteLaw, ReverseMds};

/// Steps per unit of conditional variance in an embedding.
pub const STEPS_PER_VARIANCE: f64 = 400.0;

/// A finite reverse martingale difference stream X_1, …, X_N: realized
/// values, the law of X_k given X_{k+1}, …, X_N, and E(X_k²).
pub trait IncrementSource {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// X_k for k = 1..=len.
    fn value(&self, k: usize) -> f64;
    fn law(&self, k: usize) -> ConditionalLaw;
    fn variance(&self, k: usize) -> f64;
}

impl IncrementSource for ReverseMds {
    fn len(&self) -> usize {
        self.increments.len()
    }

    fn value(&self, k: usize) -> f64 {
        self.increment(k)
    }

    fn law(&self, k: usize) -> ConditionalLaw {
        self.conditional_law(k)
    }

    fn variance(&self, k: usize) -> f64 {
        self.mfun_for(k).increment_variance()
    }
}

/// Independent symmetric increments ±|x_k| with equal weights.
#[derive(Debug, Clone)]
pub struct SignedIncrements {
    pub values: Vec<f64>,
}

impl IncrementSource for SignedIncrements {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn value(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    fn law(&self, k: usize) -> ConditionalLaw {
        let x = self.values[k - 1];
        if x == 0.0 {
            return ConditionalLaw { law: DiscreteLaw { atoms: vec![Atom { value: 0.0, weight: 1.0 }] }, actual: Some(0) };
        }
        let s = x.abs();
        let atoms = vec![Atom { value: -s, weight: 0.5 }, Atom { value: s, weight: 0.5 }];
        ConditionalLaw { law: DiscreteLaw { atoms }, actual: Some(usize::from(x > 0.0)) }
    }

    fn variance(&self, k: usize) -> f64 {
        let x = self.values[k - 1];
        x * x
    }
}

/// X_k scaled by a per-index factor.
pub struct Scaled<'a, S: IncrementSource + ?Sized> {
    pub inner: &'a S,
    /// `factor[k − 1]` multiplies X_k.
    pub factor: Vec<f64>,
}

impl<S: IncrementSource + ?Sized> IncrementSource for Scaled<'_, S> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn value(&self, k: usize) -> f64 {
        self.factor[k - 1] * self.inner.value(k)
    }

    fn law(&self, k: usize) -> ConditionalLaw {
        let c = self.factor[k - 1];
        let mut l = self.inner.law(k);
        for a in &mut l.law.atoms {
            a.value *= c;
        }
        l
    }

    fn variance(&self, k: usize) -> f64 {
        let c = self.factor[k - 1];
        c * c * self.inner.variance(k)
    }
}

/// σ_n² = Σ_{k≤n} E X_k², δ_n² = Σ_{n≤k≤N} E ξ_k² for ξ_k = X_k/σ_k²,
/// a_n = (σ_n²)^{2/p} and α_n = a_n/σ_n⁴ (index n − 1 throughout).
#[derive(Debug, Clone)]
pub struct EmbeddingSchedule {
    pub variances: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub delta2: Vec<f64>,
    pub a: Vec<f64>,
    pub alpha: Vec<f64>,
    pub p: f64,
}

impl EmbeddingSchedule {
    pub fn new(variances: Vec<f64>, p: f64) -> Self {
        let mut sigma2 = Vec::with_capacity(variances.len());
        let mut acc = 0.0;
        for v in &variances {
            acc += v;
            sigma2.push(acc);
        }
        let mut delta2 = vec![0.0; variances.len()];
        let mut tail = 0.0;
        for k in (0..variances.len()).rev() {
            if sigma2[k] > 0.0 {
                tail += variances[k] / (sigma2[k] * sigma2[k]);
            }
            delta2[k] = tail;
        }
        let a: Vec<f64> = sigma2.iter().map(|s| s.powf(2.0 / p)).collect();
        let alpha = a.iter().zip(&sigma2).map(|(a, s)| if *s > 0.0 { a / (s * s) } else { 0.0 }).collect();
        EmbeddingSchedule { variances, sigma2, delta2, a, alpha, p }
    }

    pub fn from_source(source: &(impl IncrementSource + ?Sized), p: f64) -> Self {
        Self::new((1..=source.len()).map(|k| source.variance(k)).collect(), p)
    }

    /// σ_n² nondecreasing, a_n/σ_n² nonincreasing, a_n/σ_n nondecreasing
    /// (over indices with σ_n > 0, relative slack 1e-12).
    pub fn check(&self) -> std::result::Result<(), String> {
        let tol = 1e-12;
        let idx: Vec<usize> = (0..self.sigma2.len()).filter(|i| self.sigma2[*i] > 0.0).collect();
        for w in idx.windows(2) {
            let (i, j) = (w[0], w[1]);
            if self.sigma2[j] < self.sigma2[i] * (1.0 - tol) {
                return Err(format!("sigma2 decreases at {}", j + 1));
            }
            let r = |k: usize| self.a[k] / self.sigma2[k];
            if r(j) > r(i) * (1.0 + tol) {
                return Err(format!("a/sigma^2 increases at {}", j + 1));
            }
            let q = |k: usize| self.a[k] / self.sigma2[k].sqrt();
            if q(j) < q(i) * (1.0 - tol) {
                return Err(format!("a/sigma decreases at {}", j + 1));
            }
        }
        Ok(())
    }
}

/// Result of embedding ξ_N, ξ_{N−1}, …, ξ_1 one after another.
struct ReverseRun {
    /// Realized ξ_k (index k − 1).
    values: Vec<f64>,
    /// Brownian time t_k of each embedding.
    stop_times: Vec<f64>,
    /// E(ξ_k² | future) of the law used.
    cond_vars: Vec<f64>,
    /// Path values at the query times (index k − 1).
    at_queries: Vec<f64>,
}

/// Embed a reverse martingale stream (already in path scale) starting from
/// time `start` with value `start_value`; `queries[k − 1]` is the time at
/// which the path is read for index k, nonincreasing in k.
fn reverse_embed(source: &dyn IncrementSource, bg: &mut BrownianGrid, start: f64, start_value: f64, queries: &[f64]) -> Result<ReverseRun> {
    let n = source.len();
    bg.reset(start, start_value);
    let order: Vec<f64> = queries.iter().rev().copied().collect();
    bg.set_queries(order);
    let mut values = vec![0.0; n];
    let mut stop_times = vec![0.0; n];
    let mut cond_vars = vec![0.0; n];
    for k in (1..=n).rev() {
        let law = source.law(k);
        let cv = law.law.second_moment();
        cond_vars[k - 1] = cv;
        if cv == 0.0 {
            continue;
        }
        bg.set_dt(cv / STEPS_PER_VARIANCE);
        let e = match law.actual {
            Some(t) => embed_conditioned(bg, &law.law, t)?,
            None => embed_increment(bg, &law.law)?,
        };
        values[k - 1] = e.value;
        stop_times[k - 1] = e.stop_time;
    }
    let mut at_queries = bg.finish_queries();
    at_queries.reverse();
    Ok(ReverseRun { values, stop_times, cond_vars, at_queries })
}

/// Paired trajectories of a coupling, all indexed k − 1 for k = 1..=N.
#[derive(Debug, Clone)]
pub struct CouplingTrace {
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub gaussian: Vec<f64>,
    pub gaussian_sums: Vec<f64>,
    /// sup_{j≤k} |Σ_{i≤j} (X_i − Z_i)|.
    pub sup_error: Vec<f64>,
    /// Embedding clock of X_k: Brownian time rescaled by σ_k⁴.
    pub stop_times: Vec<f64>,
    /// E(X_k² | future) of the law embedded.
    pub cond_vars: Vec<f64>,
    pub var_targets: Vec<f64>,
    pub schedule: EmbeddingSchedule,
}

impl CouplingTrace {
    pub fn final_sup_error(&self) -> f64 {
        self.sup_error.last().copied().unwrap_or(0.0)
    }
}

fn running_sup(xs: &[f64], zs: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut sx, mut sz, mut sup) = (0.0, 0.0, 0.0f64);
    let mut px = Vec::with_capacity(xs.len());
    let mut pz = Vec::with_capacity(xs.len());
    let mut ps = Vec::with_capacity(xs.len());
    for (x, z) in xs.iter().zip(zs) {
        sx += x;
        sz += z;
        sup = sup.max((sx - sz).abs());
        px.push(sx);
        pz.push(sz);
        ps.push(sup);
    }
    (px, pz, ps)
}

/// Couple a reverse martingale difference stream with independent Gaussians
/// Z_k, E Z_k² = E X_k².
///
/// The normalized tail series ξ_k = X_k/σ_k² is embedded into one path B in
/// reverse index order, each ξ_k conditioned on its realized atom, starting
/// from B at time 1/σ²_{N+1}. The partners come from the same path read at
/// the deterministic times q_k = 1/σ_k²: Z_k is σ_k²(B_{q_k} − B_{q_{k+1}})
/// rescaled to variance E X_k².
pub fn couple(source: &dyn IncrementSource, bg: &mut BrownianGrid) -> Result<CouplingTrace> {
    let n = source.len();
    if n == 0 {
        return Err(invalid("nothing to couple"));
    }
    let schedule = EmbeddingSchedule::from_source(source, 4.0);
    let s2 = &schedule.sigma2;
    let factor: Vec<f64> = s2.iter().map(|s| if *s > 0.0 { 1.0 / s } else { 0.0 }).collect();
    let xi = Scaled { inner: source, factor: factor.clone() };
    let last_v = schedule.variances[n - 1];
    let s_next = s2[n - 1] + last_v;
    let start = if s_next > 0.0 { 1.0 / s_next } else { 0.0 };
    let start_value = start.sqrt() * bg.normal();
    let queries: Vec<f64> = factor.iter().map(|f| if *f > 0.0 { *f } else { f64::INFINITY }).collect();
    let run = reverse_embed(&xi, bg, start, start_value, &queries)?;

    let increments: Vec<f64> = (1..=n).map(|k| source.value(k)).collect();
    let mut gaussian = vec![0.0; n];
    for k in 0..n {
        let v = schedule.variances[k];
        if v == 0.0 || s2[k] == 0.0 {
            continue;
        }
        let (q, b) = (queries[k], run.at_queries[k]);
        let (q_next, b_next) = if k + 1 < n { (queries[k + 1], run.at_queries[k + 1]) } else { (start, start_value) };
        let raw = s2[k] * (b - b_next);
        let raw_var = s2[k] * s2[k] * (q - q_next);
        gaussian[k] = if raw_var > 0.0 { raw * (v / raw_var).sqrt() } else { 0.0 };
    }
    let stop_times: Vec<f64> = run.stop_times.iter().zip(s2).map(|(t, s)| t * s * s).collect();
    let cond_vars: Vec<f64> = run.cond_vars.iter().zip(s2).map(|(c, s)| c * s * s).collect();
    let (partial_sums, gaussian_sums, sup_error) = running_sup(&increments, &gaussian);
    Ok(CouplingTrace {
        var_targets: schedule.variances.clone(),
        increments,
        partial_sums,
        gaussian,
        gaussian_sums,
        sup_error,
        stop_times,
        cond_vars,
        schedule,
    })
}

/// Tail sums R_n = Σ_{k≥n} ξ_k against B at time δ_n².
#[derive(Debug, Clone)]
pub struct TailTrace {
    pub delta2: Vec<f64>,
    pub tail_sums: Vec<f64>,
    pub brownian: Vec<f64>,
    pub errors: Vec<f64>,
    /// (α_n(|log(δ_n²/α_n)| + log log(1/α_n)))^{1/2}, NaN where undefined.
    pub envelope: Vec<f64>,
}

impl TailTrace {
    /// errors/envelope at index n (1-based).
    pub fn ratio(&self, n: usize) -> f64 {
        self.errors[n - 1] / self.envelope[n - 1]
    }
}

/// Embed ξ_N, …, ξ_1 from B_0 = 0 and compare R_n with B_{δ_n²}; `alpha`
/// gives α_n for the envelope.
pub fn tail_series_couple(xi: &dyn IncrementSource, alpha: &[f64], bg: &mut BrownianGrid) -> Result<TailTrace> {
    let n = xi.len();
    if alpha.len() != n {
        return Err(invalid("alpha must have one entry per increment"));
    }
    let mut delta2 = vec![0.0; n];
    let mut tail = 0.0;
    for k in (1..=n).rev() {
        tail += xi.variance(k);
        delta2[k - 1] = tail;
    }
    let run = reverse_embed(xi, bg, 0.0, 0.0, &delta2)?;
    let mut tail_sums = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += run.values[k];
        tail_sums[k] = acc;
    }
    let errors: Vec<f64> = tail_sums.iter().zip(&run.at_queries).map(|(r, b)| (r - b).abs()).collect();
    let envelope = delta2
        .iter()
        .zip(alpha)
        .map(|(d, a)| {
            let inner = (d / a).ln().abs() + (1.0 / a).ln().ln();
            if *a > 0.0 && inner > 0.0 {
                (a * inner).sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(TailTrace { delta2, tail_sums, brownian: run.at_queries, errors, envelope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_closed_form() {
        let xi = SignedIncrements { values: (1..=50).map(|k| 1.0 / k as f64).collect() };
        let mut bg = BrownianGrid::new(1, 1e-3);
        let alpha = vec![1e-3; 50];
        let t = tail_series_couple(&xi, &alpha, &mut bg).unwrap();
        for n in 1..=50 {
            let want: f64 = (n..=50).map(|k| 1.0 / (k * k) as f64).sum();
            assert!((t.delta2[n - 1] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_increments_give_zero_tail() {
        let xi = SignedIncrements { values: vec![0.0; 20] };
        let mut bg = BrownianGrid::new(2, 1e-3);
        let t = tail_series_couple(&xi, &[0.5; 20], &mut bg).unwrap();
        assert!(t.errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn schedule_hypotheses_hold() {
        let s = EmbeddingSchedule::new(vec![0.25; 1000], 4.0);
        assert!(s.check().is_ok());
        let s = EmbeddingSchedule::new(vec![0.25; 1000], 3.0);
        assert!(s.check().is_ok());
    }

    #[test]
    fn single_increment_coupling() {
        let x = SignedIncrements { values: vec![0.5] };
        let mut bg = BrownianGrid::new(3, 1e-3);
        let t = couple(&x, &mut bg).unwrap();
        assert_eq!(t.final_sup_error(), (t.increments[0] - t.gaussian[0]).abs());
    }
}
