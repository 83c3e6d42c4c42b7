//! Reproducible experiment runner for the `psifno` crate.
//!
//! [`run`] executes one [`ExperimentConfig`], writes CSV tables plus `summary.json` (and
//! `timings.json`, kept apart so everything else is byte-stable) into an output directory, and
//! returns the [`Report`]. The `psifno` binary wraps this with one subcommand per experiment.

pub mod config;
pub mod experiments;
pub mod random;
pub mod rate;
pub mod report;

use std::error::Error as StdError;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use rate::{fit_rate, fit_slope, ConvergenceRow, Refinement};
pub use report::{CriterionResult, Report, Table};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Attaches a description of the failing step to a module error.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, HarnessError>;
}

impl<T, E: StdError + Send + Sync + 'static> Context<T> for Result<T, E> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::Module {
            context: what(),
            source: Box::new(e),
        })
    }
}

/// Everything one run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Runs `config`, writing results into `out`. `jobs` bounds the worker pool (default: all cores).
pub fn run(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::ConfigInvalid(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| experiments::dispatch(config, out))?;
    outcome.write(config, out)
}
