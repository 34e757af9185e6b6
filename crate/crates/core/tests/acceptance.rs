//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Criteria run one at a time so their wall-clock budgets are meaningful.

use std::io::Write as _;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use asip_lab::chain::{dependence_series, duality_test, phi_coefficient, thresholds};
use asip_lab::coupling::{couple, embed_increment, BrownianGrid};
use asip_lab::martingale::{centering_defect, DiscreteLaw, MFunction, ReverseMds};
use asip_lab::numerics::{autocorrelation, median, GaussRule};
use asip_lab::rng;
use asip_lab::runner::{replay, run, ExperimentConfig, RunOptions};
use asip_lab::stats::{
    chi_square, check_covariance_bounds, covariances, critical_one_sample, ks_one_sample, lil_envelope, sigma2, standard_normal_cdf, asip_rate,
    RateMode,
};
use asip_lab::systems::{IntervalMap, Observable};
use asip_lab::transfer::{assess_summability, check_lipschitz_decay, check_rate_conditions, AnalyticTransfer};
use asip_lab::grid::Grid;

static SERIAL: Mutex<()> = Mutex::new(());

const SEED: u64 = 1;

/// Runs one criterion alone, prints its verdict line and fails the test on
/// a failed check or an exceeded budget.
fn criterion(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = ok && in_time;
    let line = format!(
        "criterion {id:>2} {}: {name} [{detail}] runtime {:.1}s (budget {}s{})",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", exceeded" }
    );
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    assert!(pass, "{line}");
}

fn catalog_maps() -> Vec<IntervalMap> {
    vec![
        IntervalMap::doubling(),
        IntervalMap::beta(1.5).unwrap(),
        IntervalMap::gauss(),
        IntervalMap::piecewise_linear(1.0 / 3.0).unwrap(),
    ]
}

/// ∫_0^1 (x − 1/2)·frac(2^k x) dx by Gauss–Legendre on each linear piece.
fn doubling_covariance_oracle(k: u32) -> f64 {
    let rule = GaussRule::new(8);
    let pieces = 1u64 << k;
    (0..pieces)
        .map(|j| {
            let (a, b) = (j as f64 / pieces as f64, (j + 1) as f64 / pieces as f64);
            rule.integrate(a, b, |x| (x - 0.5) * (x * pieces as f64 - j as f64))
        })
        .sum()
}

#[test]
fn criterion_01_variance_series() {
    criterion(1, "variance series, doubling, f(x)=x", Duration::from_secs(10), || {
        let map = IntervalMap::doubling();
        let f = Observable::identity();
        let cov = covariances(&map, &f, 12).unwrap();
        let oracle_gap = cov
            .iter()
            .enumerate()
            .map(|(k, c)| (c - doubling_covariance_oracle(k as u32)).abs().max((c - 2f64.powi(-(k as i32)) / 12.0).abs()))
            .fold(0.0, f64::max);
        let v = sigma2(&map, &f, 30, 1_000_000, SEED).unwrap();
        let series_rel = (v.sigma2_series - 0.25).abs() / 0.25;
        let batch_rel = (v.sigma2_batch.unwrap() - 0.25).abs() / 0.25;
        let ok = oracle_gap < 1e-9 && series_rel < 0.02 && batch_rel < 0.05 && !v.degenerate;
        (ok, format!("series {:.8} (rel {series_rel:.2e}), batch {:.5} (rel {batch_rel:.3}), covariance oracle gap {oracle_gap:.1e}", v.sigma2_series, v.sigma2_batch.unwrap()))
    });
}

type Dictionary = Vec<(&'static str, Box<dyn Fn(f64) -> f64 + Send + Sync>)>;

fn dictionary() -> Dictionary {
    vec![
        ("x", Box::new(|x| x)),
        ("x^2", Box::new(|x| x * x)),
        ("sin(2 pi x)", Box::new(|x| (2.0 * std::f64::consts::PI * x).sin())),
        ("cos(3x)", Box::new(|x| (3.0 * x).cos())),
        ("exp(-x)", Box::new(|x| (-x).exp())),
        ("1/(1+x)", Box::new(|x| 1.0 / (1.0 + x))),
        ("x^3-x", Box::new(|x| x * x * x - x)),
        ("sqrt(1+x)", Box::new(|x| (1.0 + x).sqrt())),
    ]
}

/// ν(g) over [0,1]; the Gauss density is smooth so panels suffice, the
/// others go through the jump-aware quadrature.
fn nu_integral(map: &IntervalMap, g: impl Fn(f64) -> f64) -> f64 {
    if map.is_gauss() {
        GaussRule::new(16).integrate_panels(0.0, 1.0, 64, |y| g(y) * map.h(y))
    } else {
        map.quadrature(&[]).integrate(g)
    }
}

#[test]
fn criterion_02_transfer_duality() {
    criterion(2, "transfer duality nu(f g∘T) = nu(K(f) g)", Duration::from_secs(5), || {
        let dict = dictionary();
        let pairs: Vec<(usize, usize)> = (0..20).map(|i| (i % dict.len(), (i * 3 + 1) % dict.len())).collect();
        let mut worst: (f64, String) = (0.0, String::new());
        for map in catalog_maps() {
            let op = AnalyticTransfer::new(&map);
            for (i, j) in &pairs {
                let (fname, f) = &dict[*i];
                let (gname, g) = &dict[*j];
                let lhs = map.integrate_composed(&|x| f(x), &|y| g(y));
                let rhs = nu_integral(&map, |y| op.apply_fn(&|x| f(x), y).unwrap() * g(y));
                let gap = (lhs - rhs).abs();
                if gap >= worst.0 {
                    worst = (gap, format!("{} f={fname} g={gname}", map.name()));
                }
            }
        }
        (worst.0 < 1e-6, format!("4 maps x 20 pairs, worst |lhs-rhs| {:.2e} at {}", worst.0, worst.1))
    });
}

#[test]
fn criterion_03_reverse_time_duality() {
    criterion(3, "reverse-time duality, two-sample KS", Duration::from_secs(60), || {
        let mut ok = true;
        let mut worst = (0.0f64, String::new());
        let mut count = 0;
        for map in catalog_maps() {
            let r = duality_test(&map, 4, 100_000, SEED).unwrap();
            ok &= r.all_below_critical();
            count += r.entries.len();
            for e in &r.entries {
                if e.ks / e.critical > worst.0 {
                    worst = (e.ks / e.critical, format!("{} {} ks {:.5} critical {:.5}", map.name(), e.label, e.ks, e.critical));
                }
            }
        }
        (ok, format!("{count} statistics at window 4, 1e5 replicas; worst {}", worst.1))
    });
}

#[test]
fn criterion_04_reverse_mds_centering() {
    criterion(4, "reverse martingale centering", Duration::from_secs(10), || {
        let mut ok = true;
        let mut parts = Vec::new();
        for map in catalog_maps() {
            let m = MFunction::new(&map, &Observable::identity()).unwrap();
            let defect = (0..1000).map(|i| centering_defect(&m, (i as f64 + 0.5) / 1000.0)).fold(0.0, f64::max);
            let limit = 10.0 * m.tail_bound();
            let pass = defect < limit;
            ok &= pass;
            parts.push(format!("{} defect {defect:.1e} < {limit:.1e}", map.name()));
        }
        let map = IntervalMap::doubling();
        let m = Arc::new(MFunction::new(&map, &Observable::identity()).unwrap());
        let mds = ReverseMds::sample(m, 10_001, &mut rng::from_seed(SEED)).unwrap();
        let digit_gap = (1..=mds.len())
            .map(|l| {
                let want = if mds.orbit[l - 1] < 0.5 { -0.5 } else { 0.5 };
                (mds.increment(l) - want).abs()
            })
            .fold(0.0, f64::max);
        ok &= digit_gap < 1e-10;
        parts.push(format!("doubling digit oracle gap {digit_gap:.1e}"));
        (ok, parts.join("; "))
    });
}

#[test]
fn criterion_05_embedding_clock() {
    criterion(5, "embedding clock fidelity and realized law", Duration::from_secs(60), || {
        let mut bg = BrownianGrid::new(rng::replica_seed(SEED, 0), 1e-4);
        let two = DiscreteLaw::from_pairs(&[(-0.5, 0.5), (0.5, 0.5)]).unwrap();
        let t2: f64 = (0..10_000).map(|_| embed_increment(&mut bg, &two).unwrap().stop_time).sum::<f64>() / 1e4;
        let three = DiscreteLaw::from_pairs(&[(-1.0, 0.5), (0.0, 0.25), (2.0, 0.25)]).unwrap();
        let mut counts = [0u64; 3];
        let mut t3 = 0.0;
        for _ in 0..10_000 {
            let e = embed_increment(&mut bg, &three).unwrap();
            t3 += e.stop_time / 1e4;
            let idx = three.atoms.iter().position(|a| a.value == e.value).expect("value snapped to an atom");
            counts[idx] += 1;
        }
        let chi = chi_square(&counts, &[0.5, 0.25, 0.25]);
        let (r2, r3) = ((t2 - 0.25).abs() / 0.25, (t3 - 1.5).abs() / 1.5);
        let ok = r2 < 0.02 && r3 < 0.02 && chi.p_value > 0.01;
        (ok, format!("two-point mean time {t2:.5} (rel {r2:.4}), three-point {t3:.4} (rel {r3:.4}), counts {counts:?} chi2 p {:.3}", chi.p_value))
    });
}

#[test]
fn criterion_06_coupling_quality() {
    criterion(6, "Gaussian partner quality", Duration::from_secs(120), || {
        let map = IntervalMap::doubling();
        let mfun = Arc::new(MFunction::new(&map, &Observable::identity()).unwrap());
        let n = 256;
        let reps = 10_000;
        use rayon::prelude::*;
        let traces: Vec<(Vec<f64>, Vec<f64>)> = (0..reps)
            .into_par_iter()
            .map(|i| {
                let mds = ReverseMds::sample(mfun.clone(), n + 1, &mut rng::substream(SEED, i, 0)).unwrap();
                let t = couple(&mds, &mut BrownianGrid::with_rng(rng::substream(SEED, i, 1), 1.0)).unwrap();
                (t.gaussian, t.var_targets)
            })
            .collect();
        // one standardized partner per replica: independent draws
        let first: Vec<f64> = traces.iter().map(|(z, v)| z[0] / v[0].sqrt()).collect();
        let ks = ks_one_sample(&first, standard_normal_cdf);
        let ks_ok = ks < critical_one_sample(first.len());
        let mut block_worst = 0.0f64;
        let mut j = 0;
        while (1usize << j) <= n {
            let (lo, hi) = (1usize << j, (2usize << j).min(n + 1));
            let (mut zz, mut vv) = (0.0, 0.0);
            for (z, v) in &traces {
                for k in lo..hi {
                    zz += z[k - 1] * z[k - 1];
                    vv += v[k - 1];
                }
            }
            block_worst = block_worst.max((zz / vv - 1.0).abs());
            j += 1;
        }
        let long = ReverseMds::sample(mfun.clone(), (1 << 14) + 1, &mut rng::substream(SEED, reps, 0)).unwrap();
        let t = couple(&long, &mut BrownianGrid::with_rng(rng::substream(SEED, reps, 1), 1.0)).unwrap();
        let std: Vec<f64> = t.gaussian.iter().zip(&t.var_targets).map(|(z, v)| z / v.sqrt()).collect();
        let bound = 3.0 / (std.len() as f64).sqrt();
        let (a1, a2) = (autocorrelation(&std, 1), autocorrelation(&std, 2));
        let ok = ks_ok && block_worst < 0.03 && a1.abs() < bound && a2.abs() < bound;
        (ok, format!("KS {ks:.4} (crit {:.4}), worst block variance gap {block_worst:.4}, autocorr {a1:.4} {a2:.4} (bound {bound:.4})", critical_one_sample(first.len())))
    });
}

#[test]
fn criterion_07_asip_rate() {
    criterion(7, "ASIP rate trend, doubling, f(x)=x", Duration::from_secs(600), || {
        let map = IntervalMap::doubling();
        let ns: Vec<usize> = (10..=18).map(|k| 1usize << k).collect();
        let fit = asip_rate(&map, &Observable::identity(), 4.0, &ns, 100, RateMode::Stationary, SEED).unwrap();
        let i12 = ns.iter().position(|n| *n == 1 << 12).unwrap();
        let decreasing = fit.normalized.last().unwrap() < &fit.normalized[i12];
        let ok = fit.exponent <= 0.35 && decreasing;
        (ok, format!("slope {:.4} (limit 0.35), normalized error {:.4} at 2^12 -> {:.4} at 2^18", fit.exponent, fit.normalized[i12], fit.normalized.last().unwrap()))
    });
}

/// max over thresholds x and cell midpoints y of |P(Y_n ≤ x | Y_0 = y) − x|
/// for the doubling chain, whose n-step law from y is uniform on
/// (y + j)/2^n. Thresholds are moved to the last cell midpoint below them,
/// where a cell-wise indicator switches.
fn doubling_phi_oracle(n: i32, cells: usize) -> f64 {
    let m = 2f64.powi(n);
    let c = cells as f64;
    let mut best = 0.0f64;
    for t in thresholds(256) {
        let x = ((t * c - 0.5).floor() + 1.0) / c;
        for i in 0..cells {
            let y = (i as f64 + 0.5) / cells as f64;
            let count = ((x * m - y).floor() + 1.0).clamp(0.0, m);
            best = best.max((count / m - x).abs());
        }
    }
    best
}

#[test]
fn criterion_08_phi_decay() {
    criterion(8, "phi decay on the doubling chain", Duration::from_secs(120), || {
        let map = IntervalMap::doubling();
        let phi1 = phi_coefficient(&map, 1, 12, 256).unwrap();
        let phi2 = phi_coefficient(&map, 2, 12, 256).unwrap();
        let cells = phi1.options.resolution;
        let mut bound_ok = true;
        let mut oracle_gap = 0.0f64;
        for n in 1..=12 {
            bound_ok &= phi1.value(n as usize) <= 2f64.powi(-n) + 1e-6;
            oracle_gap = oracle_gap.max((phi1.raw[n as usize - 1] - doubling_phi_oracle(n, cells)).abs());
        }
        let oracle_ok = oracle_gap < 1e-9;
        let rho = phi2.rho_fit().unwrap_or(f64::NAN);
        let s4 = dependence_series(&phi2, 4.0, 400);
        let s3 = dependence_series(&phi2, 3.0, 400);
        let stable = s4.stabilized(1e-6) && s3.stabilized(1e-6);
        let ok = bound_ok && oracle_ok && (rho - 0.5).abs() <= 0.05 && stable;
        (ok, format!("phi1 <= 2^-n: {bound_ok}, oracle gap {oracle_gap:.2e}, rho {rho:.4}, series p=4 last/total {:.1e}, p=3 {:.1e}", s4.last_increment / s4.total, s3.last_increment / s3.total))
    });
}

#[test]
fn criterion_09_covariance_bounds() {
    criterion(9, "covariance inequalities from phi", Duration::from_secs(60), || {
        let map = IntervalMap::doubling();
        let phi1 = phi_coefficient(&map, 1, 10, 256).unwrap();
        let phi2 = phi_coefficient(&map, 2, 10, 256).unwrap();
        let catalog = [
            Observable::indicator_halfline(0.5, 4.0, &map).unwrap(),
            Observable::indicator_halfline(0.3, 4.0, &map).unwrap(),
            Observable::indicator_halfline(0.7, 4.0, &map).unwrap(),
            Observable::identity(),
            Observable::power_singularity(0.2, Some(4.0), &map).unwrap(),
            Observable::constant(1.0),
        ];
        let mut ok = true;
        let mut cases = 0;
        let (mut slack1, mut slack2) = (f64::INFINITY, f64::INFINITY);
        for (i, f) in catalog.iter().enumerate() {
            for g in [f, &catalog[(i + 1) % catalog.len()]] {
                for p in [2.0, 4.0] {
                    let r = check_covariance_bounds(&map, f, g, p, 10, &phi1, &phi2).unwrap();
                    ok &= r.all_hold();
                    cases += 1;
                    for row in &r.rows {
                        slack1 = slack1.min(row.slack_first());
                        slack2 = slack2.min(row.slack_second());
                    }
                }
            }
        }
        (ok, format!("{cases} cases, k <= 10; smallest slack rhs/lhs: first {slack1:.3}, second {slack2:.3}"))
    });
}

#[test]
fn criterion_10_lil_envelope() {
    criterion(10, "LIL envelope, doubling, n = 2^20", Duration::from_secs(300), || {
        let map = IntervalMap::doubling();
        let reports: Vec<_> =
            (0..20).map(|i| lil_envelope(&map, &Observable::identity(), 1 << 20, 0.5, rng::replica_seed(SEED, i)).unwrap()).collect();
        let cps = reports[0].checkpoints.len();
        let meds: Vec<f64> = (0..cps).map(|j| median(&reports.iter().map(|r| r.ratios[j]).collect::<Vec<_>>())).collect();
        let worst = meds.iter().copied().fold(0.0, f64::max);
        let fin = median(&reports.iter().map(|r| r.final_octave).collect::<Vec<_>>());
        let ok = worst <= 1.3 && fin <= 1.1;
        (ok, format!("largest checkpoint median {worst:.3} (limit 1.3), final-octave median {fin:.3} (limit 1.1)"))
    });
}

#[test]
fn criterion_11_condition_checkers() {
    criterion(11, "summability checkers", Duration::from_secs(60), || {
        let map = IntervalMap::doubling();
        let op = AnalyticTransfer::new(&map);
        let mut ok = true;
        let mut parts = Vec::new();
        for f in [Observable::identity(), Observable::bv_example()] {
            let grid = Grid::with_jumps(&map, 1 << 12, f.breaks());
            let r = check_rate_conditions(&op, &f, 1.0, 32, &grid).unwrap();
            let pass = r.sum1.verdict.summable() && r.sum2.verdict.summable() && r.sum1.verdict.geometric && r.sum2.verdict.geometric;
            ok &= pass;
            parts.push(format!("{} summable {pass} (tail rho {:.3})", f.name(), r.sum1.verdict.tail_rho.unwrap_or(f64::NAN)));
        }
        let grid = Grid::new(&map, 1 << 12);
        let c = check_rate_conditions(&op, &Observable::constant(1.0), 1.0, 32, &grid).unwrap();
        let zero = c.sum1.total() == 0.0 && c.sum2.total() == 0.0;
        ok &= zero;
        parts.push(format!("constant sums zero {zero}"));
        let lip = check_lipschitz_decay(&op, 24, 16, &grid).unwrap();
        let lip_ok = [&lip.part_one, &lip.part_two].iter().all(|p| p.fit.is_some_and(|f| f.rho < 1.0));
        ok &= lip_ok;
        parts.push(format!("Lipschitz decay geometric {lip_ok}"));
        let flat = assess_summability(&[1.0; 32]);
        ok &= !flat.summable();
        parts.push(format!("rho = 1 control summable {}", flat.summable()));
        (ok, parts.join("; "))
    });
}

#[test]
fn criterion_12_determinism() {
    criterion(12, "byte-identical artifacts across runs and worker counts", Duration::from_secs(120), || {
        let configs = [
            r#"{"kind":"asip-rate","map":{"id":"doubling"},"sizes":[64,128,256],"reps":8,"seed":5}"#,
            r#"{"kind":"clt","map":{"id":"beta","params":{"beta":1.5}},"sizes":[64],"reps":1000,"seed":5}"#,
            r#"{"kind":"lil","map":{"id":"doubling"},"sizes":[65536],"reps":3,"seed":5}"#,
            r#"{"kind":"reverse-series","map":{"id":"doubling"},"sizes":[256],"reps":20,"seed":5}"#,
            r#"{"kind":"sigma2","map":{"id":"gauss"},"sizes":[100000],"seed":5}"#,
        ];
        let mut ok = true;
        let mut parts = Vec::new();
        for text in configs {
            let cfg = ExperimentConfig::from_json(text).unwrap();
            let bodies: Vec<Vec<u8>> = [Some(1), Some(3), Some(1)]
                .iter()
                .map(|w| {
                    let dir = tempfile::tempdir().unwrap();
                    let out = run(&cfg, &RunOptions { out_dir: dir.path().into(), workers: *w, seed: None }).unwrap();
                    std::fs::read(&out.artifacts[0]).unwrap()
                })
                .collect();
            let same = bodies.windows(2).all(|w| w[0] == w[1]);
            let dir = tempfile::tempdir().unwrap();
            let out = run(&cfg, &RunOptions { out_dir: dir.path().into(), workers: Some(2), seed: None }).unwrap();
            let replayed = replay(&out.manifest, Some(1)).unwrap().matched();
            ok &= same && replayed;
            parts.push(format!("{} identical {same} replay {replayed}", cfg.kind.label()));
        }
        (ok, parts.join("; "))
    });
}
