//! Experiment registry: every subcommand is a strategy behind the
//! [`Experiment`] trait, registered by name and selected at runtime.

use std::path::PathBuf;

use rayon::prelude::*;

use pdp_core::{NoiseMode, NoiseSource};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{config_hash, Provenance};

mod audit;
mod concentration;
mod estimate;
mod lowerbound;
mod sweep;

pub use audit::run_audit_scenario;

/// Everything a run needs besides the experiment itself.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub zero_noise: bool,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub assert_mode: bool,
}

impl RunContext {
    /// Mechanism noise stream; honors `--zero-noise`.
    pub fn mech_source(&self, stream: u64) -> NoiseSource {
        let mode = if self.zero_noise {
            NoiseMode::ZeroNoise
        } else {
            NoiseMode::Live
        };
        NoiseSource::with_mode(self.seed, stream, mode)
    }

    /// Data synthesis stream; always live so datasets stay nondegenerate.
    pub fn data_source(&self, stream: u64) -> NoiseSource {
        NoiseSource::new(self.seed, stream)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.seed,
            config_sha256: config_hash(&self.config),
        }
    }

    /// Runs `trials` independent closures on the worker pool, each owning
    /// stream ids derived from its trial index; results come back in trial
    /// order regardless of completion order.
    pub fn run_trials<T: Send>(
        &self,
        trials: usize,
        f: impl Fn(u64) -> Result<T, CliError> + Sync,
    ) -> Result<Vec<T>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
        pool.install(|| (0..trials as u64).into_par_iter().map(&f).collect())
    }
}

/// Result of a run: emitted files plus the `--assert` verdict.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub assert_ok: bool,
    pub summary_line: String,
}

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<Outcome, CliError>;
}

static REGISTRY: &[&dyn Experiment] = &[
    &lowerbound::Lowerbound,
    &estimate::EstimateBounded,
    &estimate::EstimateUnbounded,
    &sweep::Sweep,
    &audit::Audit,
    &concentration::CheckConcentration,
];

pub fn registry() -> &'static [&'static dyn Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static dyn Experiment> {
    REGISTRY.iter().copied().find(|e| e.name() == name)
}
