//! Generic DP building blocks: the sparse vector technique, the
//! inverse-sensitivity quantile mechanism, and the noisy weighted mean.
//!
//! Indexing is 0-based everywhere; callers that need ordinal arithmetic on
//! scan exponents convert at their own call sites.

use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// A lazily evaluated query sequence for the sparse vector scan.
///
/// Each query must have global sensitivity at most 1 (caller contract);
/// `max_steps` bounds how many queries the scan may evaluate.
pub struct QueryStream<'a> {
    eval: Box<dyn Fn(usize) -> f64 + 'a>,
    max_steps: usize,
}

impl<'a> QueryStream<'a> {
    pub fn new(max_steps: usize, eval: impl Fn(usize) -> f64 + 'a) -> Self {
        Self {
            eval: Box::new(eval),
            max_steps,
        }
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn query(&self, i: usize) -> f64 {
        (self.eval)(i)
    }
}

/// Sparse vector technique: perturbs the threshold once with Laplace scale
/// 2/eps, each query with scale 4/eps, and returns the first index whose
/// noisy query strictly exceeds the noisy threshold.
pub fn svt(
    queries: &QueryStream,
    threshold: f64,
    epsilon: f64,
    rng: &mut NoiseSource,
) -> Result<usize> {
    let noisy_threshold = threshold + rng.laplace(2.0 / epsilon)?;
    for i in 0..queries.max_steps() {
        let noisy_query = queries.query(i) + rng.laplace(4.0 / epsilon)?;
        if noisy_query > noisy_threshold {
            return Ok(i);
        }
    }
    Err(Error::ScanExhausted(queries.max_steps()))
}

/// Candidate outputs with their negated change-distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredGrid {
    pub candidates: Vec<f64>,
    pub scores: Vec<i64>,
}

/// Inverse-sensitivity scores for the `rank`-th order statistic (1-based).
///
/// The score of candidate y is minus the minimum number of element changes
/// needed so the rank-th smallest value equals y. With a = #{v < y} and
/// b = #{v > y} this is max(0, a - (rank-1), b - (n-rank)): surplus elements
/// below y must be raised past it, surplus above must be lowered, and the
/// two surpluses cannot both be positive.
pub fn quantile_scores(sorted_values: &[f64], rank: usize, grid: &[f64]) -> Result<ScoredGrid> {
    if sorted_values.is_empty() {
        return Err(Error::EmptyInput("quantile scores need data"));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("quantile scores need a candidate grid"));
    }
    debug_assert!(sorted_values.windows(2).all(|w| w[0] <= w[1]));
    let n = sorted_values.len();
    let rank = rank.clamp(1, n);
    let scores = grid
        .iter()
        .map(|&y| {
            let below = sorted_values.partition_point(|&v| v < y);
            let above = n - sorted_values.partition_point(|&v| v <= y);
            let deficit_low = below as i64 - (rank as i64 - 1);
            let deficit_high = above as i64 - (n as i64 - rank as i64);
            -deficit_low.max(deficit_high).max(0)
        })
        .collect();
    Ok(ScoredGrid {
        candidates: grid.to_vec(),
        scores,
    })
}

/// Rank clamp margin used by the quantile mechanism: (2/eps) ln(|grid|/beta).
pub fn rank_clamp_margin(epsilon: f64, grid_len: usize, beta: f64) -> f64 {
    (2.0 / epsilon) * (grid_len as f64 / beta).ln()
}

/// Exponential-mechanism quantile selection over a finite candidate grid.
///
/// The requested rank is rounded half-up, clamped into
/// [(2/eps) ln(|grid|/beta), n - (2/eps) ln(|grid|/beta)], scored with
/// [`quantile_scores`], and a candidate is drawn with probability
/// proportional to exp(eps * score / 2).
pub fn inverse_sensitivity_quantile(
    values: &[f64],
    rank: f64,
    epsilon: f64,
    grid: &[f64],
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty dataset"));
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("quantile needs a candidate grid"));
    }
    let n = values.len();
    let margin = rank_clamp_margin(epsilon, grid.len(), beta);
    if (n as f64) <= 2.0 * margin {
        return Err(Error::InsufficientData {
            n,
            required: 2.0 * margin,
        });
    }
    let requested = round_half_up(rank);
    let lo = margin.ceil() as i64;
    let hi = (n as f64 - margin).floor() as i64;
    let clamped = if lo <= hi {
        requested.clamp(lo, hi)
    } else {
        round_half_up(n as f64 / 2.0)
    };
    let rank = clamped.clamp(1, n as i64) as usize;

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let scored = quantile_scores(&sorted, rank, grid)?;
    let max_score = *scored.scores.iter().max().expect("nonempty grid");
    let weights: Vec<f64> = scored
        .scores
        .iter()
        .map(|&s| (epsilon * (s - max_score) as f64 / 2.0).exp())
        .collect();
    let idx = rng.categorical(&weights);
    Ok(scored.candidates[idx])
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Noise scale prescribed for a weighted mean over data of the given range
/// width: width * max_weight / epsilon.
pub fn weighted_mean_noise_scale(range_width: f64, max_weight: f64, epsilon: f64) -> f64 {
    range_width * max_weight / epsilon
}

/// Returns sum(w_i x_i) + Laplace(noise_scale); a zero scale skips the draw
/// so noiseless analysis paths stay exact.
pub fn noisy_weighted_mean(
    values: &[f64],
    weights: &[f64],
    noise_scale: f64,
    rng: &mut NoiseSource,
) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: weights.len(),
            what: "values vs weights",
        });
    }
    if noise_scale < 0.0 {
        return Err(Error::NonPositiveScale(noise_scale));
    }
    let dot: f64 = values.iter().zip(weights).map(|(x, w)| x * w).sum();
    if noise_scale == 0.0 {
        Ok(dot)
    } else {
        Ok(dot + rng.laplace(noise_scale)?)
    }
}
