//! Config-driven experiment runs: JSON config in, CSV tables plus a manifest out.
//!
//! Each failing grid point produces a NaN row with an error tag instead of aborting the
//! run; callers see the failure count in [`RunSummary`].

pub mod config;
pub mod experiments;
pub mod output;
pub mod presets;
pub mod validate;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ConfigIssue, ExperimentConfig, ExperimentKind};
pub use presets::{preset, PRESET_NAMES};
pub use validate::{inspect, ValidationReport};

use crate::measurement::{EvalOptions, ReductionMode};
use output::{git_revision, sha256_hex, write_tables, Manifest};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] crate::SimError),
}

/// Command-line overrides; `None` falls back to the config.
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output: PathBuf,
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub failures: usize,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Config(vec![ConfigIssue { path: path.display().to_string(), message: e.to_string() }])
    })?;
    let cfg = ExperimentConfig::from_json(&text).map_err(|i| RunError::Config(vec![i]))?;
    check(&cfg)?;
    Ok(cfg)
}

pub fn check(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(())
    } else {
        Err(RunError::Config(issues))
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| RunError::Config(vec![ConfigIssue { path: "threads".into(), message: e.to_string() }]))
}

/// Runs in a dedicated thread pool, writes the tables and `manifest.json`.
pub fn run(cfg: &ExperimentConfig, settings: &RunSettings) -> Result<RunSummary, RunError> {
    check(cfg)?;
    if settings.threads == Some(0) {
        return Err(RunError::Config(vec![ConfigIssue { path: "--threads".into(), message: "must be at least 1".into() }]));
    }
    let deterministic = settings.deterministic || cfg.reduction == ReductionMode::Deterministic;
    let opts = if deterministic { EvalOptions::deterministic() } else { EvalOptions::default() };
    let pool = thread_pool(settings.threads.or(cfg.threads))?;
    let threads = pool.current_num_threads();
    let tables = pool.install(|| experiments::run_experiment(cfg, opts, settings.seed))?;

    let dir = settings.output.clone().unwrap_or_else(|| cfg.output.clone());
    let files = write_tables(&dir, &tables, deterministic)?;
    let rows = tables.iter().map(|t| t.rows.len()).sum();
    let failures = tables.iter().map(|t| t.failures()).sum();
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        convention_version: crate::CONVENTION_VERSION.into(),
        config_sha256: sha256_hex(&canonical),
        git_revision: git_revision(),
        seed: settings.seed,
        threads,
        deterministic,
        rows,
        failures,
        files: files.iter().filter_map(|f| f.file_name()).map(|f| f.to_string_lossy().into_owned()).collect(),
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    fs::write(dir.join("config.json"), cfg.to_json())?;
    let mut all = files;
    all.push(manifest_path);
    Ok(RunSummary { output: dir, files: all, rows, failures })
}
