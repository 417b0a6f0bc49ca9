//! PDP range estimation: discretization granularity, coarse radius, and the
//! diffuse / discretize / median / recenter pipeline.
//!
//! All scans are sparse-vector scans over exponentially spaced thresholds
//! with the (sensitive) dataset size folded into the query side, so the SVT
//! threshold itself stays public (zero). Scan exponents are 0-based.

use crate::data::{Dataset, Model};
use crate::diffusion::{diffuse, plan_rates, saturate, RateMode};
use crate::error::{Error, Result};
use crate::mech::{inverse_sensitivity_quantile, svt, QueryStream};
use crate::noise::NoiseSource;

/// Hard cap on scan length: covers magnitudes 2^-128 .. 2^128. Degenerate
/// (constant) data surfaces ScanExhausted instead of looping.
const MAX_SCAN_EXPONENTS: usize = 128;

/// Largest candidate grid the median mechanism will materialize.
const MAX_GRID_POINTS: u64 = 1 << 24;

/// Estimated data range plus the quantities the caller needs to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeEstimate {
    pub lo: f64,
    pub hi: f64,
    /// Discretization granularity b, always an exact power of two.
    pub bucket: f64,
    pub median: f64,
    pub diagnostics: RangeDiagnostics,
}

impl RangeEstimate {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn covers(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Operational counters recorded while estimating a range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RangeDiagnostics {
    /// Queries evaluated across all sparse-vector scans.
    pub svt_steps: usize,
    /// Slots that survived diffusion.
    pub kept: usize,
    /// Candidate grid size used for the median.
    pub grid_len: usize,
}

/// Absolute differences of disjoint random pairs; |G| = floor(n / 2).
pub fn differential_dataset(values: &[f64], rng: &mut NoiseSource) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFewElements {
            n: values.len(),
            required: 2,
        });
    }
    let mut shuffled = values.to_vec();
    rng.shuffle(&mut shuffled);
    Ok(shuffled
        .chunks_exact(2)
        .map(|pair| (pair[0] - pair[1]).abs())
        .collect())
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

/// #{g in sorted : g <= r}
fn count_le(sorted: &[f64], r: f64) -> f64 {
    sorted.partition_point(|&g| g <= r) as f64
}

fn pow2(exp: i32) -> f64 {
    2.0f64.powi(exp)
}

fn discretize_impl(
    values: &[f64],
    epsilon: f64,
    rng: &mut NoiseSource,
    steps: &mut usize,
) -> Result<(Vec<f64>, f64)> {
    let diffs = differential_dataset(values, rng)?;
    let g = sorted_copy(&diffs);
    let half = g.len() as f64 / 2.0;

    let up = QueryStream::new(MAX_SCAN_EXPONENTS, |e| count_le(&g, pow2(e as i32)) - half);
    let e_up = svt(&up, 0.0, epsilon / 2.0, rng)?;
    *steps += e_up + 1;

    let exp = if e_up >= 1 {
        // b0 = 2^(e_up - 1), final b = b0 / 2
        e_up as i32 - 2
    } else {
        let down = QueryStream::new(MAX_SCAN_EXPONENTS, |e| {
            half - count_le(&g, pow2(-(e as i32)))
        });
        let e_down = svt(&down, 0.0, epsilon / 2.0, rng)?;
        *steps += e_down + 1;
        // b0 = 2^(-e_down - 1), final b = b0 / 2
        -(e_down as i32) - 2
    };
    let b = pow2(exp);
    let quantized = values.iter().map(|&x| b * (x / b).floor()).collect();
    Ok((quantized, b))
}

/// Picks a discretization granularity b via two sparse-vector scans over the
/// differential dataset (budget epsilon/2 each), then assigns every value to
/// its quantization bin b * floor(x / b).
///
/// The up-scan finds the first exponent e with Count(G, 2^e) > |G|/2; if it
/// stops at e = 0 the down-scan searches the negative exponents instead.
pub fn discretize(
    values: &[f64],
    epsilon: f64,
    _beta: f64,
    rng: &mut NoiseSource,
) -> Result<(Vec<f64>, f64)> {
    let mut steps = 0;
    discretize_impl(values, epsilon, rng, &mut steps)
}

fn estimate_radius_impl(
    values: &[f64],
    epsilon: f64,
    b: f64,
    beta: f64,
    rng: &mut NoiseSource,
    steps: &mut usize,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::ScanExhausted(0));
    }
    let abs_sorted = sorted_copy(&values.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let n = values.len() as f64;
    let threshold = -(6.0 / epsilon) * (2.0 / beta).ln();
    let queries = QueryStream::new(MAX_SCAN_EXPONENTS, |e| {
        count_le(&abs_sorted, pow2(e as i32) * b) - n
    });
    let e_star = svt(&queries, threshold, epsilon, rng)?;
    *steps += e_star + 1;
    Ok(pow2(e_star as i32) * b)
}

/// Coarse radius: the crossing scale 2^e b at the first scan exponent e
/// where Count(|x| <= 2^e b) comes within the noisy margin of the full
/// count. Returning anything below the crossing scale cannot reach the
/// coverage the recentered range is required to deliver.
pub fn estimate_radius(
    values: &[f64],
    epsilon: f64,
    b: f64,
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<f64> {
    let mut steps = 0;
    estimate_radius_impl(values, epsilon, b, beta, rng, &mut steps)
}

/// Full PDP range estimation with the default capped rates.
pub fn estimate_range(
    dataset: &Dataset,
    budgets: &[f64],
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<RangeEstimate> {
    estimate_range_with(dataset, budgets, beta, RateMode::Capped, rng)
}

/// Full PDP range estimation: saturate the budgets, diffuse, pick a
/// granularity, locate a coarse radius, take a private median on the grid
/// [-R, R] intersected with b Z, recenter, and estimate the centered radius.
/// Each of the four sub-mechanisms runs at budget tau / 4.
pub fn estimate_range_with(
    dataset: &Dataset,
    budgets: &[f64],
    beta: f64,
    mode: RateMode,
    rng: &mut NoiseSource,
) -> Result<RangeEstimate> {
    if dataset.len() != budgets.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: budgets.len(),
            what: "dataset vs budgets",
        });
    }
    let profile = saturate(budgets)?;
    let tau = profile.tau();
    let plan = plan_rates(profile.sorted_budgets(), &profile, mode)?;

    // Align records with the ascending budget order the plan was built for.
    let values = dataset.values();
    let sorted_values: Vec<f64> = profile.order().iter().map(|&i| values[i]).collect();
    let sorted_ds = Dataset::from_parts(&sorted_values, profile.sorted_budgets(), Model::Bounded)?;
    let diffused = diffuse(&sorted_ds, &plan, rng)?;
    let kept = diffused.kept_values();

    let mut diagnostics = RangeDiagnostics {
        kept: kept.len(),
        ..Default::default()
    };
    let sub_budget = tau / 4.0;
    let sub_beta = beta / 4.0;

    let (quantized, bucket) = discretize_impl(&kept, sub_budget, rng, &mut diagnostics.svt_steps)?;
    let coarse_radius = estimate_radius_impl(
        &quantized,
        sub_budget,
        bucket,
        sub_beta,
        rng,
        &mut diagnostics.svt_steps,
    )?;

    let half_points = (coarse_radius / bucket).floor();
    let grid_points = 2.0 * half_points + 1.0;
    if grid_points > MAX_GRID_POINTS as f64 {
        return Err(Error::GridTooLarge(grid_points as u64));
    }
    let m = half_points as i64;
    let grid: Vec<f64> = (-m..=m).map(|i| i as f64 * bucket).collect();
    diagnostics.grid_len = grid.len();

    // The grid is bounded by the coarse radius but the scores are computed
    // against every kept value, so a coarse interval that undershoots the
    // data still pulls the median to its nearest grid point.
    // Rank: half the expected kept size under the eps_i/(2 tau) rates.
    let rank = profile.effective_total() / (4.0 * tau);
    let median = inverse_sensitivity_quantile(&quantized, rank, sub_budget, &grid, sub_beta, rng)?;

    let centered: Vec<f64> = quantized.iter().map(|&x| x - median).collect();
    let centered_radius = estimate_radius_impl(
        &centered,
        sub_budget,
        bucket,
        sub_beta,
        rng,
        &mut diagnostics.svt_steps,
    )?;

    Ok(RangeEstimate {
        lo: median - centered_radius,
        hi: median + centered_radius,
        bucket,
        median,
        diagnostics,
    })
}
