//! Budget-weighted mean estimation under bounded PDP and the minimax
//! lower-bound evaluator the estimators are judged against.

use crate::data::{clip_all, Dataset};
use crate::diffusion::{effective_budget, plan_rates, saturate, RateMode};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::range::{estimate_range_with, RangeEstimate};

/// Non-fatal conditions noticed while estimating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// n is below the pilot-calibrated utility threshold; the estimate is
    /// still returned because privacy never depends on n.
    SampleSize,
}

impl Warning {
    pub fn tag(&self) -> &'static str {
        match self {
            Warning::SampleSize => "sample_size",
        }
    }
}

/// Point estimate plus the accounting needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub estimate: f64,
    pub range_used: Option<RangeEstimate>,
    pub noise_scale: f64,
    pub warnings: Vec<Warning>,
    /// Exact per-record budget spent, in original record order.
    pub budget_ledger: Vec<f64>,
}

struct AdpmOutcome {
    estimate: f64,
    noise_scale: f64,
    /// Saturated budget (the exact per-record spend), original record order.
    spend: Vec<f64>,
}

fn adpm_detail(
    values: &[f64],
    budgets: &[f64],
    width: f64,
    rng: &mut NoiseSource,
) -> Result<AdpmOutcome> {
    if values.len() != budgets.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: budgets.len(),
            what: "values vs budgets",
        });
    }
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::NonPositiveWidth(width));
    }
    let profile = saturate(budgets)?;
    let total = profile.eps_tilde_sum();
    // The weight attaches to the record, not the position: accumulate in
    // sorted order but spend against the original index.
    let mut dot = 0.0;
    let mut spend = vec![0.0; values.len()];
    for (pos, &orig) in profile.order().iter().enumerate() {
        let weight = profile.eps_tilde()[pos] / total;
        dot += weight * values[orig];
        spend[orig] = profile.eps_tilde()[pos];
    }
    let noise_scale = width / total;
    let estimate = dot + rng.laplace(noise_scale)?;
    Ok(AdpmOutcome {
        estimate,
        noise_scale,
        spend,
    })
}

/// Saturated-budget-weighted mean with Laplace noise of scale
/// width / sum(eps_tilde). Values must already be clipped to an interval of
/// the given width.
pub fn adpm(values: &[f64], budgets: &[f64], width: f64, rng: &mut NoiseSource) -> Result<f64> {
    Ok(adpm_detail(values, budgets, width, rng)?.estimate)
}

/// End-to-end bounded-PDP Gaussian mean estimation with capped rates.
pub fn pdp_mean_bounded(
    dataset: &Dataset,
    budgets: &[f64],
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<EstimationReport> {
    pdp_mean_bounded_with(dataset, budgets, beta, RateMode::Capped, rng)
}

/// End-to-end bounded-PDP Gaussian mean estimation: estimate a range at half
/// the budgets and beta/6, clip, then take the weighted mean at the other
/// half.
pub fn pdp_mean_bounded_with(
    dataset: &Dataset,
    budgets: &[f64],
    beta: f64,
    mode: RateMode,
    rng: &mut NoiseSource,
) -> Result<EstimationReport> {
    if dataset.len() != budgets.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: budgets.len(),
            what: "dataset vs budgets",
        });
    }
    for &b in budgets {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::BudgetOutOfRange(b));
        }
    }
    if dataset.len() < 2 {
        return Err(Error::TooFewElements {
            n: dataset.len(),
            required: 2,
        });
    }

    let half: Vec<f64> = budgets.iter().map(|b| b / 2.0).collect();
    let range = estimate_range_with(dataset, &half, beta / 6.0, mode, rng)?;
    let clipped = clip_all(&dataset.values(), range.lo, range.hi)?;
    let outcome = adpm_detail(&clipped, &half, range.width(), rng)?;

    // Exact ledger: amplified spend of the range stage plus the saturated
    // spend of the mean stage, both at the halved budgets.
    let profile = saturate(&half)?;
    let plan = plan_rates(profile.sorted_budgets(), &profile, mode)?;
    let mut ledger = vec![0.0; dataset.len()];
    for (pos, &orig) in profile.order().iter().enumerate() {
        ledger[orig] = effective_budget(plan.rates()[pos], profile.tau()) + outcome.spend[orig];
    }

    let mut warnings = Vec::new();
    if (dataset.len() as f64) < sample_size_threshold(budgets, &profile, beta) {
        warnings.push(Warning::SampleSize);
    }

    Ok(EstimationReport {
        estimate: outcome.estimate,
        range_used: Some(range),
        noise_scale: outcome.noise_scale,
        warnings,
        budget_ledger: ledger,
    })
}

/// Pilot-calibrated utility threshold (C / eps_1) log(1/beta) loglog(.)
/// with C = 32; below it the estimator warns rather than refuses.
fn sample_size_threshold(
    budgets: &[f64],
    profile: &crate::diffusion::SaturationProfile,
    beta: f64,
) -> f64 {
    let eps1 = budgets.iter().copied().fold(f64::INFINITY, f64::min);
    let inner = (profile.effective_total() / (beta * profile.tau())).max(std::f64::consts::E);
    let loglog = inner.ln().ln().max(1.0);
    (32.0 / eps1) * (1.0 / beta).ln() * loglog
}

/// Minimax lower bound: max over k of sigma / (sqrt2 (prefix_k + 2 sqrt(n-k))).
///
/// The same evaluator serves the unbounded model applied to the realized
/// privacy vector of a dataset.
pub fn lower_bound(budgets: &[f64], sigma: f64) -> Result<f64> {
    Ok(lower_bound_argmax(budgets, sigma)?.1)
}

/// Lower bound together with the maximizing prefix length k (1-based).
pub fn lower_bound_argmax(budgets: &[f64], sigma: f64) -> Result<(usize, f64)> {
    if budgets.is_empty() {
        return Err(Error::EmptyBudgets);
    }
    let mut sorted = budgets.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite budgets"));
    let n = sorted.len();
    let mut prefix = 0.0;
    let mut best = (1usize, f64::NEG_INFINITY);
    for k in 1..=n {
        prefix += sorted[k - 1];
        let base = std::f64::consts::FRAC_1_SQRT_2 / (prefix + 2.0 * ((n - k) as f64).sqrt());
        if base > best.1 {
            best = (k, base);
        }
    }
    Ok((best.0, sigma * best.1))
}
