use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{RateMode, SumSource, Thresholds};
use crate::systems::{map_catalog, IntervalMap, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Orbit,
    Sigma2,
    Clt,
    Lil,
    AsipRate,
    Duality,
    Phi,
    #[serde(alias = "kcond")]
    RateConditions,
    #[serde(alias = "pfo")]
    LipschitzDecay,
    CovarianceBounds,
    HansonRusso,
    ReverseSeries,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Orbit => "orbit",
            ExperimentKind::Sigma2 => "sigma2",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Lil => "lil",
            ExperimentKind::AsipRate => "asip-rate",
            ExperimentKind::Duality => "duality",
            ExperimentKind::Phi => "phi",
            ExperimentKind::RateConditions => "rate-conditions",
            ExperimentKind::LipschitzDecay => "lipschitz-decay",
            ExperimentKind::CovarianceBounds => "covariance-bounds",
            ExperimentKind::HansonRusso => "hanson-russo",
            ExperimentKind::ReverseSeries => "reverse-series",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spec {
    pub id: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl Spec {
    pub fn named(id: &str) -> Self {
        Spec { id: id.to_string(), params: BTreeMap::new() }
    }

    pub fn describe(&self) -> String {
        if self.params.is_empty() {
            return self.id.clone();
        }
        let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.id, ps.join(";"))
    }
}

/// Scaling of the increments fed to the reverse-series check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesScale {
    /// ξ_k = d*_k / k.
    Harmonic,
    /// ξ_k = d*_k.
    Unit,
}

/// One experiment. Fields a kind does not use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub map: Spec,
    #[serde(default = "identity_spec")]
    pub observable: Spec,
    /// Second observable of the covariance bounds; defaults to the first.
    #[serde(default)]
    pub observable2: Option<Spec>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub reps: Option<usize>,
    pub seed: u64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub lags: Option<usize>,
    #[serde(default)]
    pub source: Option<SumSource>,
    #[serde(default)]
    pub mode: Option<RateMode>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub dict_size: Option<usize>,
    #[serde(default)]
    pub scale: Option<SeriesScale>,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// File stem of the artifacts; defaults to the kind.
    #[serde(default)]
    pub output: Option<String>,
}

fn identity_spec() -> Spec {
    Spec::named("identity_centered")
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, map: &str, observable: &str, seed: u64) -> Self {
        ExperimentConfig {
            kind,
            map: Spec::named(map),
            observable: Spec::named(observable),
            observable2: None,
            p: None,
            sizes: Vec::new(),
            reps: None,
            seed,
            dt: None,
            lags: None,
            source: None,
            mode: None,
            gamma: None,
            dict_size: None,
            scale: None,
            thresholds: Thresholds::default(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.kind.label().to_string())
    }

    pub fn build_map(&self) -> Result<IntervalMap> {
        map_catalog(&self.map.id, &self.map.params)
    }

    pub fn build_observable(&self, map: &IntervalMap) -> Result<Observable> {
        Observable::catalog(&self.observable.id, &self.observable.params, map)
    }

    pub fn build_observable2(&self, map: &IntervalMap) -> Result<Observable> {
        let spec = self.observable2.as_ref().unwrap_or(&self.observable);
        Observable::catalog(&spec.id, &spec.params, map)
    }

    /// The single size of kinds that take one, or `default`.
    pub fn size(&self, default: usize) -> usize {
        self.sizes.first().copied().unwrap_or(default)
    }

    pub fn p_or(&self, default: f64) -> f64 {
        self.p.unwrap_or(default)
    }

    pub fn reps_or(&self, default: usize) -> usize {
        self.reps.unwrap_or(default)
    }

    /// Resolves every id and checks the ranges each kind relies on.
    pub fn validate(&self) -> Result<()> {
        let map = self.build_map()?;
        self.build_observable(&map)?;
        if self.observable2.is_some() {
            self.build_observable2(&map)?;
        }
        if let Some(stem) = &self.output {
            if stem.is_empty() || stem.contains(['/', '\\']) || stem.starts_with('.') {
                return Err(config_err(format!("output stem `{stem}` must be a plain file name")));
            }
        }
        if self.sizes.contains(&0) {
            return Err(config_err("sizes must be positive"));
        }
        if self.reps == Some(0) {
            return Err(config_err("reps must be positive"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(config_err(format!("dt must be positive, got {dt}")));
            }
        }
        let p_range = |lo: f64, hi: f64, lo_open: bool| -> Result<()> {
            if let Some(p) = self.p {
                let ok = if lo_open { p > lo } else { p >= lo } && p <= hi;
                if !ok {
                    return Err(config_err(format!("p = {p} outside the range of {}", self.kind.label())));
                }
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::Orbit | ExperimentKind::Clt | ExperimentKind::Duality | ExperimentKind::Lil => {
                if self.sizes.is_empty() {
                    return Err(config_err(format!("{} needs `sizes` with the length", self.kind.label())));
                }
            }
            ExperimentKind::AsipRate => {
                p_range(2.0, 4.0, true)?;
                if self.sizes.len() < 3 {
                    return Err(config_err("asip-rate needs at least 3 sizes"));
                }
            }
            ExperimentKind::Phi | ExperimentKind::RateConditions => p_range(2.0, 4.0, true)?,
            ExperimentKind::CovarianceBounds => p_range(1.0, 4.0, false)?,
            ExperimentKind::ReverseSeries => p_range(1.0, 2.0, false)?,
            ExperimentKind::HansonRusso => {
                if self.sizes.len() != 2 {
                    return Err(config_err("hanson-russo needs sizes [window steps, horizon steps]"));
                }
            }
            ExperimentKind::Sigma2 | ExperimentKind::LipschitzDecay => {}
        }
        Ok(())
    }
}
