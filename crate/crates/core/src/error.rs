//! Error type shared by every estimation pipeline.

use thiserror::Error;

/// Errors surfaced by the estimation library.
///
/// Each variant corresponds to a violated precondition or an unrecoverable
/// runtime condition of exactly one operation; pipelines propagate them
/// unchanged so callers can name the failing stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Laplace scale must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    OutOfRange(f64),
    #[error("clipping range is inverted: lo {lo} > hi {hi}")]
    InvertedRange { lo: f64, hi: f64 },
    #[error("threshold scan evaluated {0} queries without a crossing")]
    ScanExhausted(usize),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("need n > {required} data points for the requested quantile, got {n}")]
    InsufficientData { n: usize, required: f64 },
    #[error("length mismatch: {left} vs {right} ({what})")]
    LengthMismatch {
        left: usize,
        right: usize,
        what: &'static str,
    },
    #[error("budget vector is empty")]
    EmptyBudgets,
    #[error("privacy budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("diffusing rate {rate} for budget {budget} exceeds 1")]
    RateOverflow { rate: f64, budget: f64 },
    #[error("need at least {required} elements, got {n}")]
    TooFewElements { n: usize, required: usize },
    #[error("median grid would hold {0} points (cap 2^24)")]
    GridTooLarge(u64),
    #[error("no compliant diffusing rate for budget {0}")]
    BudgetOverflow(f64),
    #[error("mean width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("budget {0} outside (0, 1]")]
    BudgetOutOfRange(f64),
    #[error(
        "invalid privacy domain: require 0 < eps_min <= eps_max <= 1, got [{eps_min}, {eps_max}]"
    )]
    InvalidBounds { eps_min: f64, eps_max: f64 },
    #[error("record budget {budget} outside declared domain [{eps_min}, {eps_max}]")]
    BudgetOutsideDomain {
        budget: f64,
        eps_min: f64,
        eps_max: f64,
    },
    #[error("all bucket counts truncated to zero; shrunk dataset is empty")]
    EmptyShrunk,
    #[error("all probability mass fell in one bin for both inputs")]
    DegenerateBinning,
    #[error("inconsistent sampling parameters: {0}")]
    InconsistentParams(&'static str),
    #[error("audit scale exceeded: {0}")]
    ScaleTooLarge(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
