//! Experiment configuration, orchestration and result files.
//!
//! A run reads one TOML config, validates every selected estimator up
//! front, executes them in a fixed order and writes one CSV per table plus
//! `results.csv` and a JSON sidecar (`run.json`). Every CSV row carries the
//! SHA-256 of the config so that `verify_dir` can detect mixed outputs.

mod config;
mod experiments;
mod output;

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::estimators::EstimatorError;
use crate::graph::GraphError;
use crate::spectral::SpectralError;
use crate::walk::WalkError;

pub use config::{
    default_beta, parse_config, parse_config_str, resolve_edge, ArcsConfig, DecayConfig, DynlocConfig, EcConfig,
    EstimatorKind, ExperimentConfig, FmecConfig, FracmomConfig, GapprobConfig, IdentitiesConfig, SmallnessConfig,
    SpecavgConfig, SpectrumConfig, Violation, DEFAULT_S, SCHEMA_VERSION,
};
pub use output::{verify_dir, OutputDir, ResultRecord, Sidecar, HASH_COLUMN, SIDECAR};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

impl From<SpectralError> for HarnessError {
    fn from(e: SpectralError) -> Self {
        HarnessError::Estimator(e.into())
    }
}

impl From<WalkError> for HarnessError {
    fn from(e: WalkError) -> Self {
        HarnessError::Estimator(e.into())
    }
}

impl From<GraphError> for HarnessError {
    fn from(e: GraphError) -> Self {
        HarnessError::Estimator(e.into())
    }
}

/// Process exit status for a finished or failed run.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config_hash: String,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    pub records: Vec<ResultRecord>,
    /// One line per failed check, naming the record.
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() { EXIT_PASS } else { EXIT_ASSERTION }
    }
}

/// Runs every estimator of `config`, writing into `config.out_dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(HarnessError::Invalid(violations));
    }
    let start = Instant::now();
    let g = config.graph.build()?;
    let hash = config.hash();
    let mut out = OutputDir::create(&config.out_dir, hash.clone())?;
    let mut failures = Vec::new();
    let mut kinds = config.estimators.clone();
    kinds.sort();
    for kind in kinds {
        experiments::run_estimator(kind, config, &g, &mut out, &mut failures)?;
    }
    let records = out.records().to_vec();
    let files = out.finish(config, &failures, start.elapsed().as_secs_f64())?;
    Ok(RunOutcome { config_hash: hash, files, records, failures })
}

/// [`run`] on a dedicated pool of `threads` workers (`None`: all cores).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutcome, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| HarnessError::Threads(e.to_string()))?;
    pool.install(|| run(config))
}

/// Writes the edge list and the walk matrix of one realization.
pub fn dump_operator(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<String>, HarnessError> {
    let g = config.graph.build()?;
    let mut out = OutputDir::create(out_dir, config.hash())?;
    experiments::dump_operator(config, &g, &mut out)?;
    out.finish(config, &[], 0.0)
}
