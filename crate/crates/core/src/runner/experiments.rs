use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, SeriesScale};
use super::csv::{format_float, Cell, Table, Verdict};
use crate::chain::{dependence_series, duality_test, phi_coefficient, ChainPath};
use crate::coupling::{hanson_russo_check, BrownianGrid};
use crate::error::Result;
use crate::grid::Grid;
use crate::martingale::{MFunction, ReverseMds};
use crate::numerics::median;
use crate::rng;
use crate::stats::{
    asip_rate, check_covariance_bounds, clt_test, compare_sums, lil_envelope, reverse_series_check, sigma2, RateMode, SumSource,
};
use crate::systems::{typical_orbit, IntervalMap, Observable};
use crate::transfer::{check_lipschitz_decay, check_rate_conditions, AnalyticTransfer};

/// Lags of the covariance series when a kind needs σ but sets none.
pub const DEFAULT_LAGS: usize = 30;
/// Cells of the operator grid used by the summability checks.
pub const CONDITION_GRID: usize = 1 << 12;

fn f(v: f64) -> String {
    format_float(v)
}

fn header_meta(t: &mut Table, cfg: &ExperimentConfig) {
    t.meta("tool", concat!("asip-lab ", env!("CARGO_PKG_VERSION")))
        .meta("kind", cfg.kind.label())
        .meta("map", cfg.map.describe())
        .meta("observable", cfg.observable.describe())
        .meta("seed", cfg.seed)
        .meta("seed_scheme", rng::GENERATOR);
}

fn sigma_of(map: &IntervalMap, obs: &Observable, cfg: &ExperimentConfig) -> Result<f64> {
    let v = sigma2(map, obs, cfg.lags.unwrap_or(DEFAULT_LAGS), 0, cfg.seed)?;
    Ok(if v.degenerate { 0.0 } else { v.sigma2_series.max(0.0).sqrt() })
}

/// Runs one experiment and returns its tables, named by suffix ("" for the
/// main table).
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<(String, Table)>> {
    let map = cfg.build_map()?;
    let obs = cfg.build_observable(&map)?;
    let th = &cfg.thresholds;
    let mut t;
    match cfg.kind {
        ExperimentKind::Orbit => {
            let n = cfg.size(1);
            let mut r = rng::from_seed(cfg.seed);
            let orbit = typical_orbit(&map, n - 1, &mut r);
            t = Table::new(&["i", "x", "f"]);
            header_meta(&mut t, cfg);
            t.meta("n", n);
            for (i, x) in orbit.points.iter().enumerate() {
                t.push(vec![i.into(), (*x).into(), obs.eval(*x).into()]);
            }
            let mut states = orbit.points.clone();
            states.reverse();
            let mut branches = orbit.branches.clone();
            branches.reverse();
            let path = ChainPath { states, branches, seed: cfg.seed };
            let check = path.check_steps(&map);
            let detail = match &check {
                Ok(()) => format!("max_defect={}", f(path.max_step_defect(&map))),
                Err(d) => format!("step={} defect={} tolerance={}", d.step, f(d.defect), f(d.tolerance)),
            };
            t.verdict(Verdict::new(check.is_ok(), "orbit-steps", detail));
        }
        ExperimentKind::Sigma2 => {
            let lags = cfg.lags.unwrap_or(DEFAULT_LAGS);
            let n = cfg.sizes.first().copied().unwrap_or(0);
            let v = sigma2(&map, &obs, lags, n, cfg.seed)?;
            t = Table::new(&["k", "covariance"]);
            header_meta(&mut t, cfg);
            t.meta("lags", lags)
                .meta("sigma2_series", f(v.sigma2_series))
                .meta("tail_bound", f(v.tail_bound))
                .meta("sigma2_batch", v.sigma2_batch.map(f).unwrap_or_else(|| "none".into()))
                .meta("n_used", v.n_used)
                .meta("batches", v.batches)
                .meta("degenerate", v.degenerate)
                .meta("inconsistent", v.inconsistent);
            for (k, c) in v.covariances.iter().enumerate() {
                t.push(vec![k.into(), (*c).into()]);
            }
            t.verdict(Verdict::new(!v.degenerate, "sigma2-nondegenerate", format!("sigma2_series={} tail_bound={}", f(v.sigma2_series), f(v.tail_bound))));
            t.verdict(Verdict::new(!v.inconsistent, "sigma2-consistent", format!("sigma2_series={} threshold=-tail_bound", f(v.sigma2_series))));
            if let Some(d) = v.discrepancy() {
                t.verdict(Verdict::new(
                    d <= th.sigma2_agreement_rel,
                    "sigma2-agreement",
                    format!("relative_gap={} threshold={}", f(d), th.sigma2_agreement_rel),
                ));
            }
        }
        ExperimentKind::Clt => {
            let n = cfg.size(1);
            let reps = cfg.reps_or(2000);
            let sigma = sigma_of(&map, &obs, cfg)?;
            let sources = match cfg.source {
                Some(s) => vec![s],
                None => vec![SumSource::ForwardOrbit, SumSource::BackwardChain],
            };
            let reports = sources.iter().map(|s| clt_test(*s, &map, &obs, n, reps, sigma, cfg.seed)).collect::<Result<Vec<_>>>()?;
            t = Table::new(&["replica", "source", "normalized_sum"]);
            header_meta(&mut t, cfg);
            t.meta("n", n).meta("reps", reps).meta("sigma", f(sigma));
            for r in &reports {
                for (i, z) in r.normalized.iter().enumerate() {
                    t.push(vec![i.into(), r.source.label().into(), (*z).into()]);
                }
            }
            for r in &reports {
                t.verdict(Verdict::new(
                    r.ks < th.clt_ks,
                    format!("clt-{}", r.source.label()),
                    format!("ks={} p_value={} threshold={}", f(r.ks), f(r.p_value), th.clt_ks),
                ));
            }
            if let [a, b] = reports.as_slice() {
                let gap = (a.ks - b.ks).abs();
                t.verdict(Verdict::new(gap <= th.duality_sum_ks, "clt-ks-gap", format!("gap={} threshold={}", f(gap), th.duality_sum_ks)));
                let d = compare_sums(a, b);
                t.verdict(Verdict::new(
                    d.ks < d.critical,
                    "sum-duality",
                    format!("ks={} p_value={} critical={} alpha={}", f(d.ks), f(d.p_value), f(d.critical), th.alpha),
                ));
            }
        }
        ExperimentKind::Lil => {
            let n = cfg.size(1 << 20);
            let reps = cfg.reps_or(1);
            let sigma = sigma_of(&map, &obs, cfg)?;
            let reports = (0..reps)
                .into_par_iter()
                .map(|i| lil_envelope(&map, &obs, n, sigma, rng::replica_seed(cfg.seed, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            t = Table::new(&["replica", "statistic", "n", "ratio"]);
            header_meta(&mut t, cfg);
            t.meta("n_max", n).meta("reps", reps).meta("sigma", f(sigma));
            for (i, r) in reports.iter().enumerate() {
                for (c, x) in r.checkpoints.iter().zip(&r.ratios) {
                    t.push(vec![i.into(), "checkpoint".into(), (*c).into(), (*x).into()]);
                }
                t.push(vec![i.into(), "final-octave".into(), n.into(), r.final_octave.into()]);
            }
            let cps = reports[0].checkpoints.len();
            let meds: Vec<f64> = (0..cps).map(|j| median(&reports.iter().map(|r| r.ratios[j]).collect::<Vec<_>>())).collect();
            let worst = meds.iter().copied().fold(0.0, f64::max);
            let fin = median(&reports.iter().map(|r| r.final_octave).collect::<Vec<_>>());
            t.verdict(Verdict::new(worst <= th.lil_checkpoint, "lil-checkpoints", format!("max_median_ratio={} threshold={}", f(worst), th.lil_checkpoint)));
            t.verdict(Verdict::new(fin <= th.lil_final_octave, "lil-final-octave", format!("median={} threshold={}", f(fin), th.lil_final_octave)));
            let (last, earlier) = meds.split_last().expect("at least one checkpoint");
            let explosive = !earlier.is_empty() && *last > 2.0 * median(earlier);
            t.verdict(Verdict::new(!explosive, "lil-trend", format!("last={} earlier_median={} factor=2", f(*last), f(median(earlier)))));
        }
        ExperimentKind::AsipRate => {
            let p = cfg.p_or(4.0);
            let reps = cfg.reps_or(100);
            let mode = cfg.mode.unwrap_or_else(|| RateMode::default_for(&obs));
            let fit = asip_rate(&map, &obs, p, &cfg.sizes, reps, mode, cfg.seed)?;
            t = Table::new(&["n", "sup_error", "normalized", "residual", "partial_sup"]);
            header_meta(&mut t, cfg);
            t.meta("p", p).meta("reps", reps).meta("mode", mode.label()).meta("exponent", f(fit.exponent)).meta("partial_exponent", f(fit.partial_exponent));
            for i in 0..fit.ns.len() {
                t.push(vec![fit.ns[i].into(), fit.sup_errors[i].into(), fit.normalized[i].into(), fit.residuals[i].into(), fit.partial_sups[i].into()]);
            }
            let limit = match mode {
                RateMode::Stationary => th.rate_slope,
                RateMode::Blocks => 1.0 / p + th.rate_slack,
            };
            t.verdict(Verdict::new(fit.exponent <= limit, "rate-exponent", format!("exponent={} threshold={}", f(fit.exponent), limit)));
            let from = if fit.ns.contains(&4096) { 4096 } else { fit.ns[1] };
            let dec = fit.normalized_decreases(from).unwrap_or(false);
            t.verdict(Verdict::new(dec, "rate-normalized-decreasing", format!("from_n={from} to_n={}", fit.ns.last().unwrap())));
        }
        ExperimentKind::Duality => {
            let window = cfg.size(4);
            let reps = cfg.reps_or(100_000);
            let r = duality_test(&map, window, reps, cfg.seed)?;
            t = Table::new(&["statistic", "ks", "p_value", "critical"]);
            header_meta(&mut t, cfg);
            t.meta("window", window).meta("reps", reps);
            for e in &r.entries {
                t.push(vec![e.label.clone().into(), e.ks.into(), e.p_value.into(), e.critical.into()]);
            }
            let worst = r.worst().map(|e| format!("worst={} ks={} critical={}", e.label, f(e.ks), f(e.critical))).unwrap_or_default();
            t.verdict(Verdict::new(r.all_below_critical(), "reverse-time-duality", format!("{worst} alpha={}", th.alpha)));
        }
        ExperimentKind::Phi => {
            let horizon = cfg.size(12);
            let p = cfg.p_or(4.0);
            let phi1 = phi_coefficient(&map, 1, horizon, 256)?;
            let phi2 = phi_coefficient(&map, 2, horizon, 256)?;
            let series = dependence_series(&phi2, p, 400);
            t = Table::new(&["n", "phi1", "phi2", "summand", "partial"]);
            header_meta(&mut t, cfg);
            t.meta("p", p).meta("rho1", phi1.rho_fit().map(f).unwrap_or_else(|| "none".into())).meta("rho2", phi2.rho_fit().map(f).unwrap_or_else(|| "none".into()));
            for (i, (s, ps)) in series.summands.iter().zip(&series.partial).enumerate() {
                let (a, b) = if i < horizon { (Cell::from(phi1.values[i]), Cell::from(phi2.values[i])) } else { ("".into(), "".into()) };
                t.push(vec![(i + 1).into(), a, b, (*s).into(), (*ps).into()]);
            }
            let rho_ok = phi2.rho_fit().is_some_and(|r| r < 1.0);
            t.verdict(Verdict::new(rho_ok, "phi-geometric", format!("rho2={} threshold=1", phi2.rho_fit().map(f).unwrap_or_else(|| "none".into()))));
            t.verdict(Verdict::new(
                series.stabilized(th.series_stabilization_rel),
                "dependence-series",
                format!("last_increment={} total={} threshold={}", f(series.last_increment), f(series.total), th.series_stabilization_rel),
            ));
        }
        ExperimentKind::RateConditions => {
            let gamma = cfg.gamma.unwrap_or(1.0);
            let horizon = cfg.size(32);
            let op = AnalyticTransfer::new(&map);
            let grid = Grid::with_jumps(&map, CONDITION_GRID, obs.breaks());
            let r = check_rate_conditions(&op, &obs, gamma, horizon, &grid)?;
            t = Table::new(&["n", "summand1", "partial1", "summand2", "partial2"]);
            header_meta(&mut t, cfg);
            t.meta("gamma", gamma).meta("horizon", horizon);
            for i in 0..horizon {
                t.push(vec![(i + 1).into(), r.sum1.summands[i].into(), r.sum1.partial[i].into(), r.sum2.summands[i].into(), r.sum2.partial[i].into()]);
            }
            for (name, s) in [("first-series", &r.sum1), ("second-series", &r.sum2)] {
                t.verdict(Verdict::new(
                    s.verdict.summable(),
                    name,
                    format!("total={} tail_rho={} diverging={}", f(s.total()), s.verdict.tail_rho.map(f).unwrap_or_else(|| "none".into()), s.verdict.diverging),
                ));
            }
            t.verdict(Verdict::new(r.fourth_moment_finite, "fourth-moment", "threshold=finite"));
        }
        ExperimentKind::LipschitzDecay => {
            let horizon = cfg.size(24);
            let dict = cfg.dict_size.unwrap_or(16);
            let op = AnalyticTransfer::new(&map);
            let grid = Grid::new(&map, CONDITION_GRID);
            let r = check_lipschitz_decay(&op, horizon, dict, &grid)?;
            t = Table::new(&["n", "part_one", "part_two"]);
            header_meta(&mut t, cfg);
            t.meta("dict_size", dict).meta("horizon", horizon);
            for i in 0..horizon {
                t.push(vec![(i + 1).into(), r.part_one.maxima[i].into(), r.part_two.maxima[i].into()]);
            }
            for (name, part) in [("decay-part-one", &r.part_one), ("decay-part-two", &r.part_two)] {
                let rho = part.fit.map(|x| x.rho);
                let zero = part.maxima.iter().all(|m| *m == 0.0);
                t.verdict(Verdict::new(zero || rho.is_some_and(|r| r < 1.0), name, format!("rho={} threshold=1", rho.map(f).unwrap_or_else(|| "none".into()))));
            }
        }
        ExperimentKind::CovarianceBounds => {
            let horizon = cfg.size(10);
            let p = cfg.p_or(2.0);
            let g = cfg.build_observable2(&map)?;
            let phi1 = phi_coefficient(&map, 1, horizon, 256)?;
            let phi2 = phi_coefficient(&map, 2, horizon, 256)?;
            let r = check_covariance_bounds(&map, &obs, &g, p, horizon, &phi1, &phi2)?;
            t = Table::new(&["k", "lhs_first", "rhs_first", "slack_first", "lhs_second", "rhs_second", "slack_second"]);
            header_meta(&mut t, cfg);
            t.meta("observable2", g.name()).meta("p", p).meta("phi_caveat", "right sides use grid lower bounds of phi");
            for row in &r.rows {
                t.push(vec![
                    row.k.into(),
                    row.lhs_first.into(),
                    row.rhs_first.into(),
                    row.slack_first().into(),
                    row.lhs_second.into(),
                    row.rhs_second.into(),
                    row.slack_second().into(),
                ]);
            }
            let v = r.violations();
            t.verdict(Verdict::new(v.is_empty(), "covariance-bounds", format!("violations={} horizon={horizon}", v.len())));
        }
        ExperimentKind::HansonRusso => {
            let dt = cfg.dt.unwrap_or(1.0);
            let (w, h) = (cfg.sizes[0], cfg.sizes[1]);
            let reps = cfg.reps_or(1);
            let reports = (0..reps)
                .into_par_iter()
                .map(|i| {
                    let mut bg = BrownianGrid::with_rng(rng::replica(cfg.seed, i as u64), dt);
                    hanson_russo_check(&mut bg, w as f64 * dt, h as f64 * dt)
                })
                .collect::<Result<Vec<_>>>()?;
            t = Table::new(&["replica", "sup_ratio", "argmax_time"]);
            header_meta(&mut t, cfg);
            t.meta("dt", f(dt)).meta("window", f(w as f64 * dt)).meta("horizon", f(h as f64 * dt)).meta("reps", reps);
            for (i, r) in reports.iter().enumerate() {
                t.push(vec![i.into(), r.sup_ratio.into(), r.argmax_time.into()]);
            }
            let m = median(&reports.iter().map(|r| r.sup_ratio).collect::<Vec<_>>());
            t.verdict(Verdict::new(
                (th.hanson_russo_lo..=th.hanson_russo_hi).contains(&m),
                "increment-modulus",
                format!("median_ratio={} band=[{},{}]", f(m), th.hanson_russo_lo, th.hanson_russo_hi),
            ));
        }
        ExperimentKind::ReverseSeries => {
            let n = cfg.size(4096);
            let reps = cfg.reps_or(200);
            let p = cfg.p_or(2.0);
            let scale = cfg.scale.unwrap_or(SeriesScale::Harmonic);
            let mfun = std::sync::Arc::new(MFunction::new(&map, &obs)?);
            let replicas = (0..reps)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng::replica(cfg.seed, i as u64);
                    let mds = ReverseMds::sample(mfun.clone(), n + 1, &mut r)?;
                    Ok(mds
                        .increments
                        .iter()
                        .enumerate()
                        .map(|(k, d)| match scale {
                            SeriesScale::Harmonic => d / (k + 1) as f64,
                            SeriesScale::Unit => *d,
                        })
                        .collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let r = reverse_series_check(&replicas, p)?;
            t = Table::new(&["checkpoint", "median_tail_oscillation"]);
            header_meta(&mut t, cfg);
            let label = match scale {
                SeriesScale::Harmonic => "harmonic",
                SeriesScale::Unit => "unit",
            };
            t.meta("n", n).meta("reps", reps).meta("p", p).meta("scale", label);
            for (c, m) in r.checkpoints.iter().zip(&r.medians) {
                t.push(vec![(*c).into(), (*m).into()]);
            }
            let ratios: Vec<String> = r.ratios().iter().map(|x| f(*x)).collect();
            t.verdict(Verdict::new(
                r.shrinking || r.all_zero,
                "reverse-series-tails",
                format!("ratios=[{}] all_zero={} threshold={}", ratios.join(";"), r.all_zero, crate::stats::series::SHRINK_RATIO),
            ));
        }
    }
    Ok(vec![(String::new(), t)])
}
