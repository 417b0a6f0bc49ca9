//! Personalized-differential-privacy mean and range estimation for Gaussian
//! data, under both the bounded (change-one) and unbounded (add/remove-one)
//! neighboring models.
//!
//! The crate provides:
//!
//! - seeded, stream-separable noise ([`noise`]) and dataset types ([`data`]);
//! - generic DP building blocks: sparse vector scans, inverse-sensitivity
//!   quantiles, noisy weighted means ([`mech`]);
//! - the diffusion primitive with exact per-record budget accounting
//!   ([`diffusion`]);
//! - range estimation over diffused data ([`range`]) and the end-to-end
//!   bounded-model mean estimator plus minimax lower-bound evaluator
//!   ([`mean`]);
//! - the unbounded-to-bounded reduction ([`unbounded`]);
//! - an empirical privacy auditor and concentration-bound evaluators with a
//!   Monte Carlo oracle ([`audit`]).
//!
//! Every operation takes an explicit [`noise::NoiseSource`]; fixing its seed
//! fixes the whole pipeline, and the zero-noise mode yields deterministic
//! traces for golden tests.

pub mod audit;
pub mod data;
pub mod diffusion;
pub mod error;
pub mod mean;
pub mod mech;
pub mod noise;
pub mod range;
pub mod unbounded;

pub use data::{clip, clip_all, Dataset, Model, Record};
pub use diffusion::{
    diffuse, effective_budget, plan_rates, saturate, DiffusedDataset, DiffusionPlan, RateMode,
    SaturationProfile, Slot,
};
pub use error::{Error, Result};
pub use mean::{
    adpm, lower_bound, lower_bound_argmax, pdp_mean_bounded, pdp_mean_bounded_with,
    EstimationReport, Warning,
};
pub use mech::{
    inverse_sensitivity_quantile, noisy_weighted_mean, quantile_scores, svt, QueryStream,
    ScoredGrid,
};
pub use noise::{NoiseMode, NoiseSource};
pub use range::{
    differential_dataset, discretize, estimate_radius, estimate_range, estimate_range_with,
    RangeDiagnostics, RangeEstimate,
};
pub use unbounded::{
    partition, pdp_mean_unbounded, pdp_mean_unbounded_with, shrink, truncated_noisy_count,
    wor_sample, Bucket, PrivacyPartition, ShrinkResult,
};
