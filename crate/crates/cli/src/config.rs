//! Experiment configuration: one JSON document per run.

use serde::{Deserialize, Serialize};

use pdp_core::{NoiseSource, RateMode};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for Distribution {
    fn default() -> Self {
        Self {
            mu: 0.0,
            sigma: 1.0,
        }
    }
}

/// How per-record budgets are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetProfile {
    Uniform { uniform: f64 },
    List { list: Vec<f64> },
    Categorical { categorical: CategoricalBudgets },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalBudgets {
    pub values: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl BudgetProfile {
    /// Materializes a budget vector of length n; categorical profiles draw
    /// i.i.d. from the given stream.
    pub fn resolve(&self, n: usize, rng: &mut NoiseSource) -> Vec<f64> {
        match self {
            BudgetProfile::Uniform { uniform } => vec![*uniform; n],
            BudgetProfile::List { list } => list.clone(),
            BudgetProfile::Categorical { categorical } => {
                let weights = categorical
                    .weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0; categorical.values.len()]);
                (0..n)
                    .map(|_| categorical.values[rng.categorical(&weights)])
                    .collect()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BudgetProfile::Uniform { uniform } => format!("uniform({uniform})"),
            BudgetProfile::List { list } => format!("list(len={})", list.len()),
            BudgetProfile::Categorical { categorical } => {
                format!("categorical({:?})", categorical.values)
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let check = |b: &f64| *b > 0.0 && b.is_finite();
        let ok = match self {
            BudgetProfile::Uniform { uniform } => check(uniform),
            BudgetProfile::List { list } => !list.is_empty() && list.iter().all(check),
            BudgetProfile::Categorical { categorical } => {
                !categorical.values.is_empty()
                    && categorical.values.iter().all(check)
                    && categorical
                        .weights
                        .as_ref()
                        .map(|w| {
                            w.len() == categorical.values.len()
                                && w.iter().all(|x| *x >= 0.0)
                                && w.iter().sum::<f64>() > 0.0
                        })
                        .unwrap_or(true)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(
                "budgets: every budget must be positive and finite".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Bounded,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModeName {
    Paper,
    Capped,
}

impl From<RateModeName> for RateMode {
    fn from(m: RateModeName) -> RateMode {
        match m {
            RateModeName::Paper => RateMode::Paper,
            RateModeName::Capped => RateMode::Capped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSection {
    #[serde(default = "default_audit_trials")]
    pub trials: usize,
    pub scenarios: Vec<AuditScenario>,
}

fn default_audit_trials() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditScenario {
    /// Same mechanism, same input: epsilon-hat is pure sampling noise.
    Identical,
    /// Laplace mechanism on a sensitivity-1 count at the given budget.
    LaplaceCount { epsilon: f64 },
    /// Deterministic release of the dataset size on add/remove neighbors.
    DeterministicSize,
    /// Diffusion composed with a tau-DP randomized-response indicator;
    /// audits every index of a 5-record dataset against the amplification
    /// identity.
    Diffusion { tau: f64, rates: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSection {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
}

fn default_instances() -> usize {
    100
}

fn default_mc_trials() -> usize {
    100_000
}

fn default_t_points() -> usize {
    10
}

/// The single configuration document every subcommand reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Mandatory for reported runs; `--seed` overrides.
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub distribution: Distribution,
    #[serde(default = "default_budgets")]
    pub budgets: BudgetProfile,
    #[serde(default = "default_model")]
    pub model: ModelName,
    #[serde(default)]
    pub eps_min: Option<f64>,
    #[serde(default)]
    pub eps_max: Option<f64>,
    #[serde(default = "default_rate_mode")]
    pub rate_mode: RateModeName,
    /// Output directory; `--out` overrides.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub audit: Option<AuditSection>,
    #[serde(default)]
    pub concentration: Option<ConcentrationSection>,
}

fn default_trials() -> usize {
    100
}

fn default_beta() -> f64 {
    0.1
}

fn default_n() -> usize {
    1000
}

fn default_budgets() -> BudgetProfile {
    BudgetProfile::Uniform { uniform: 1.0 }
}

fn default_model() -> ModelName {
    ModelName::Bounded
}

fn default_rate_mode() -> RateModeName {
    RateModeName::Capped
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(CliError::Config(format!(
                "beta: must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.n == 0 {
            return Err(CliError::Config("n: must be positive".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be positive".into()));
        }
        if self.distribution.sigma < 0.0 || !self.distribution.sigma.is_finite() {
            return Err(CliError::Config(format!(
                "distribution.sigma: must be a finite nonnegative real, got {}",
                self.distribution.sigma
            )));
        }
        self.budgets.validate()?;
        match (self.eps_min, self.eps_max) {
            (Some(lo), Some(hi)) if !(lo > 0.0 && lo <= hi && hi <= 1.0) => {
                return Err(CliError::Config(format!(
                    "eps_min/eps_max: require 0 < eps_min <= eps_max <= 1, got [{lo}, {hi}]"
                )));
            }
            _ => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.n.is_empty() || sweep.eps.is_empty() || sweep.sigma.is_empty() {
                return Err(CliError::Config(
                    "sweep: all grid axes must be nonempty".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resolved seed; reported runs refuse to proceed without one.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("seed: mandatory for reported runs".into()))
    }
}
