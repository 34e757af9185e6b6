//! Closed-form checks against quantities known without simulation.

use asip_lab::martingale::{cutoff, level_of, MFunction};
use asip_lab::numerics::GaussRule;
use asip_lab::stats::{covariances, sigma2};
use asip_lab::systems::{IntervalMap, Observable};
use asip_lab::transfer::AnalyticTransfer;

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn doubling_transfer_is_the_two_point_average() {
    let map = IntervalMap::doubling();
    let op = AnalyticTransfer::new(&map);
    let f = |x: f64| (5.0 * x).sin() + x * x;
    for i in 0..50 {
        let y = (i as f64 + 0.25) / 50.0;
        let want = 0.5 * (f(y / 2.0) + f((y + 1.0) / 2.0));
        assert!((op.apply_fn(&f, y).unwrap() - want).abs() < 1e-15);
    }
}

#[test]
fn gauss_density_is_invariant() {
    // ν(g∘T) = ν(g) with h(x) = 1/((1+x) ln 2)
    let map = IntervalMap::gauss();
    let g = |x: f64| (3.0 * x).cos() + x.sqrt();
    // x = u² removes the square-root singularity
    let direct = GaussRule::new(16).integrate_panels(0.0, 1.0, 64, |u| 2.0 * u * g(u * u) / ((1.0 + u * u) * LN2));
    let pulled = map.integrate_composed(&|_| 1.0, &g);
    assert!((direct - pulled).abs() < 1e-9, "{direct} vs {pulled}");
}

#[test]
fn gauss_transfer_fixes_the_density() {
    // K1 = 1 pointwise, including the omitted branches
    let op = AnalyticTransfer::new(&IntervalMap::gauss());
    for &y in &[0.0, 0.01, 0.5, 0.999] {
        assert!((op.apply_fn(&|_| 1.0, y).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn gauss_transfer_of_identity() {
    // K(x)(y) = (1+y) Σ_k 1/((k+y)²(k+1+y)), checked against a long partial sum
    let op = AnalyticTransfer::new(&IntervalMap::gauss());
    for &y in &[0.1, 0.6] {
        let mut brute = 0.0;
        for k in (1..2_000_000u64).rev() {
            let s = 1.0 / (k as f64 + y);
            brute += (1.0 + y) * s * (s - 1.0 / (k as f64 + 1.0 + y));
        }
        // remaining terms beyond 2·10⁶ are below 1e-13
        let got = op.apply_fn(&|x| x, y).unwrap();
        assert!((got - brute).abs() < 1e-12, "{y}: {got} vs {brute}");
    }
}

#[test]
fn doubling_identity_covariances_and_variance() {
    let map = IntervalMap::doubling();
    let f = Observable::identity();
    let c = covariances(&map, &f, 12).unwrap();
    for (k, ck) in c.iter().enumerate() {
        let want = 2f64.powi(-(k as i32)) / 12.0;
        assert!((ck - want).abs() < 1e-10, "lag {k}: {ck} vs {want}");
    }
    // σ² = 1/12 (1 + 2 Σ 2^{-k}) = 1/4
    let est = sigma2(&map, &f, 40, 0, 1).unwrap();
    assert!((est.sigma2_series - 0.25).abs() < 1e-9);
}

#[test]
fn piecewise_linear_preserves_lebesgue() {
    let map = IntervalMap::piecewise_linear(0.3).unwrap();
    for k in 1..6 {
        // ν(g∘T) = ∫ y^k dy
        let pulled = map.integrate_composed(&|_| 1.0, &|y| y.powi(k));
        assert!((pulled - 1.0 / (k + 1) as f64).abs() < 1e-13, "{k}: {pulled}");
    }
}

#[test]
fn doubling_martingale_function_for_identity() {
    // with A = Σ_j K^j f, m(u, v) = A(u) − KA(v) and E m = 0 over preimages
    let map = IntervalMap::doubling();
    let m = MFunction::new(&map, &Observable::identity()).unwrap();
    for &v in &[0.1, 0.5, 0.8] {
        let mean = 0.5 * (m.m_eval(v / 2.0, v) + m.m_eval((v + 1.0) / 2.0, v));
        assert!(mean.abs() < 1e-12);
        // the two preimages differ by 1/2 and A has slope Σ 2^{-j} → 2
        let gap = m.m_eval((v + 1.0) / 2.0, v) - m.m_eval(v / 2.0, v);
        assert!((gap - 1.0).abs() < 1e-6, "{gap}");
    }
}

#[test]
fn block_cutoffs_and_levels() {
    assert_eq!(level_of(1), 0);
    assert_eq!(level_of(2), 0);
    assert_eq!(level_of(3), 1);
    assert_eq!(level_of(4), 1);
    assert_eq!(level_of(5), 2);
    assert_eq!(level_of(1 << 20), 19);
    assert_eq!(level_of((1 << 20) + 1), 20);
    assert!((cutoff(4, 2.0) - 4.0 / 4.0).abs() < 1e-15);
    assert!((cutoff(8, 4.0) - 4.0 * 8f64.powf(-0.5)).abs() < 1e-14);
    assert_eq!(cutoff(0, 3.0), cutoff(1, 3.0));
}
