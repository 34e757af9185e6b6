//! Experiment configs, CSV artifacts, manifests and replay.

mod config;
mod csv;
mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, ExperimentKind, SeriesScale, Spec};
pub use csv::{format_float, Cell, Table, Verdict};
pub use experiments::{execute, CONDITION_GRID, DEFAULT_LAGS};

use crate::error::{Error, Result};
use crate::rng;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Overrides the config seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// Artifact file names, relative to the manifest.
    pub artifacts: Vec<String>,
    pub seed_scheme: String,
    pub workers: Option<usize>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
}

/// Runs `f` on a pool of `workers` threads, or inline when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("workers must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn artifact_name(stem: &str, suffix: &str) -> String {
    if suffix.is_empty() {
        format!("{stem}.csv")
    } else {
        format!("{stem}-{suffix}.csv")
    }
}

pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = config.clone();
    if let Some(seed) = options.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let start = Instant::now();
    let tables = with_workers(options.workers, || execute(&cfg))??;
    let elapsed = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(&options.out_dir)?;
    let stem = cfg.stem();
    let mut artifacts = Vec::new();
    let mut names = Vec::new();
    let mut verdicts = Vec::new();
    for (suffix, table) in &tables {
        let name = artifact_name(&stem, suffix);
        let path = options.out_dir.join(&name);
        std::fs::write(&path, table.render())?;
        verdicts.extend(table.verdicts.iter().cloned());
        artifacts.push(path);
        names.push(name);
    }
    let manifest = Manifest {
        tool: "asip-lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg,
        artifacts: names,
        seed_scheme: rng::GENERATOR.into(),
        workers: options.workers,
        elapsed_seconds: elapsed,
    };
    let manifest_path = options.out_dir.join(format!("{stem}{MANIFEST_SUFFIX}"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutcome { manifest: manifest_path, artifacts, verdicts })
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub compared: Vec<String>,
    /// Artifacts that differ or are missing.
    pub mismatches: Vec<String>,
}

impl ReplayOutcome {
    pub fn matched(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-runs the manifest's config in a scratch directory and compares every
/// artifact byte for byte with the one stored next to the manifest.
pub fn replay(manifest_path: &Path, workers: Option<usize>) -> Result<ReplayOutcome> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let scratch = tempfile::tempdir()?;
    let options = RunOptions { out_dir: scratch.path().to_path_buf(), workers, seed: None };
    let fresh = run(&manifest.config, &options)?;
    let mut mismatches = Vec::new();
    let mut compared = Vec::new();
    let fresh_names: Vec<String> =
        fresh.artifacts.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    for name in manifest.artifacts.iter().chain(fresh_names.iter().filter(|n| !manifest.artifacts.contains(n))) {
        let stored = std::fs::read(dir.join(name));
        let again = std::fs::read(scratch.path().join(name));
        match (stored, again) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => mismatches.push(name.clone()),
        }
        compared.push(name.clone());
    }
    Ok(ReplayOutcome { compared, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_run_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Orbit, "doubling", "identity_centered", 3);
        cfg.sizes = vec![64];
        let out = run(&cfg, &RunOptions { out_dir: dir.path().into(), workers: Some(1), seed: None }).unwrap();
        assert!(out.verdicts.iter().all(|v| v.passed));
        let body = std::fs::read_to_string(&out.artifacts[0]).unwrap();
        assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 65);
        assert!(replay(&out.manifest, Some(2)).unwrap().matched());
    }
}
