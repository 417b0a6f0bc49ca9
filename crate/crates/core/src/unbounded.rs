//! Reduction from unbounded PDP (add/remove-one neighbors, private budgets)
//! to the bounded estimator: exponentially spaced privacy-domain partition,
//! truncated noisy per-bucket counts, and without-replacement shrinkage.
//!
//! Count noise uses scale 2/eps_bucket so counting spends eps_bucket / 2 per
//! affected user; together with the distance-2 bounded-estimation spend at
//! eps_bucket / 4 the total stays within the bucket endpoint, which never
//! exceeds the user's true budget.

use crate::data::{Dataset, Model, Record};
use crate::diffusion::RateMode;
use crate::error::{Error, Result};
use crate::mean::{pdp_mean_bounded_with, EstimationReport};
use crate::noise::NoiseSource;

/// One privacy sub-domain [lo, hi) (the last bucket is right-closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub closed_right: bool,
}

impl Bucket {
    pub fn contains(&self, eps: f64) -> bool {
        if self.closed_right {
            self.lo <= eps && eps <= self.hi
        } else {
            self.lo <= eps && eps < self.hi
        }
    }
}

/// Exponentially expanding partition of [eps_min, eps_max].
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyPartition {
    buckets: Vec<Bucket>,
}

impl PrivacyPartition {
    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn bucket_of(&self, eps: f64) -> Option<usize> {
        self.buckets.iter().position(|b| b.contains(eps))
    }
}

/// Partitions [eps_min, eps_max] into buckets [2^e eps_min, 2^(e+1) eps_min)
/// plus a final right-closed [2^floor(log2 T) eps_min, eps_max], T being
/// eps_max / eps_min.
pub fn partition(eps_min: f64, eps_max: f64) -> Result<PrivacyPartition> {
    if eps_min <= 0.0
        || !eps_min.is_finite()
        || !eps_max.is_finite()
        || eps_min > eps_max
        || eps_max > 1.0
    {
        return Err(Error::InvalidBounds { eps_min, eps_max });
    }
    let ratio = eps_max / eps_min;
    let mut lg = ratio.log2().floor() as i32;
    // Guard the floor against floating-point log2 on near-power-of-two ratios.
    while lg > 0 && eps_min * 2.0f64.powi(lg) > eps_max {
        lg -= 1;
    }
    while eps_min * 2.0f64.powi(lg + 1) <= eps_max {
        lg += 1;
    }
    let mut buckets = Vec::with_capacity(lg as usize + 1);
    for e in 0..lg {
        buckets.push(Bucket {
            lo: eps_min * 2.0f64.powi(e),
            hi: eps_min * 2.0f64.powi(e + 1),
            closed_right: false,
        });
    }
    buckets.push(Bucket {
        lo: eps_min * 2.0f64.powi(lg),
        hi: eps_max,
        closed_right: true,
    });
    Ok(PrivacyPartition { buckets })
}

/// max(0, floor(true_count + Lap(2/eps) - (2/eps) ln(2 n_buckets / beta))).
///
/// The offset makes the released count an underestimate with probability at
/// least 1 - beta / (2 n_buckets).
pub fn truncated_noisy_count(
    true_count: u64,
    bucket_eps: f64,
    n_buckets: usize,
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<u64> {
    let scale = 2.0 / bucket_eps;
    let offset = scale * (2.0 * n_buckets as f64 / beta).ln();
    let noisy = true_count as f64 + rng.laplace(scale)? - offset;
    Ok(noisy.floor().max(0.0) as u64)
}

/// Uniform without-replacement sample of min(m, |pool|) elements; when m
/// exceeds the pool the result is padded with zeros to length m.
pub fn wor_sample(pool: &[f64], m: usize, rng: &mut NoiseSource) -> Vec<f64> {
    let take = m.min(pool.len());
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    let mut out = Vec::with_capacity(m);
    for t in 0..take {
        let j = t + rng.index(indices.len() - t);
        indices.swap(t, j);
        out.push(pool[indices[t]]);
    }
    out.resize(m, 0.0);
    out
}

/// Bounded-model dataset produced by the reduction, plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkResult {
    pub shrunk: Dataset,
    /// Bucket left endpoints, one per shrunk record, ascending.
    pub public_budgets: Vec<f64>,
    pub deleted_count: u64,
    pub padded_count: u64,
}

/// Per bucket: release a truncated noisy count and keep that many records
/// sampled without replacement, each downgraded to the bucket's left
/// endpoint budget (never above its true budget).
pub fn shrink(
    dataset: &Dataset,
    eps_min: f64,
    eps_max: f64,
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<ShrinkResult> {
    let part = partition(eps_min, eps_max)?;
    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); part.len()];
    for r in dataset.records() {
        let idx = part.bucket_of(r.budget).ok_or(Error::BudgetOutsideDomain {
            budget: r.budget,
            eps_min,
            eps_max,
        })?;
        pools[idx].push(r.value);
    }

    let mut records = Vec::new();
    let mut public_budgets = Vec::new();
    let mut deleted = 0u64;
    let mut padded = 0u64;
    for (bucket, pool) in part.buckets().iter().zip(&pools) {
        let kept = truncated_noisy_count(pool.len() as u64, bucket.lo, part.len(), beta, rng)?;
        deleted += (pool.len() as u64).saturating_sub(kept);
        padded += kept.saturating_sub(pool.len() as u64);
        if kept == 0 {
            continue;
        }
        for value in wor_sample(pool, kept as usize, rng) {
            records.push(Record::new(value, bucket.lo)?);
            public_budgets.push(bucket.lo);
        }
    }
    Ok(ShrinkResult {
        shrunk: Dataset::new(records, Model::Bounded)?,
        public_budgets,
        deleted_count: deleted,
        padded_count: padded,
    })
}

/// End-to-end unbounded-PDP mean estimation with the default capped rates.
pub fn pdp_mean_unbounded(
    dataset: &Dataset,
    eps_min: f64,
    eps_max: f64,
    beta: f64,
    rng: &mut NoiseSource,
) -> Result<EstimationReport> {
    pdp_mean_unbounded_with(dataset, eps_min, eps_max, beta, RateMode::Capped, rng)
}

/// End-to-end unbounded-PDP mean estimation: shrink at beta/2, then run the
/// bounded estimator on the shrunk dataset at a quarter of the public
/// budgets and beta/2.
pub fn pdp_mean_unbounded_with(
    dataset: &Dataset,
    eps_min: f64,
    eps_max: f64,
    beta: f64,
    mode: RateMode,
    rng: &mut NoiseSource,
) -> Result<EstimationReport> {
    let shrunk = shrink(dataset, eps_min, eps_max, beta / 2.0, rng)?;
    if shrunk.shrunk.is_empty() {
        return Err(Error::EmptyShrunk);
    }
    let quarter: Vec<f64> = shrunk.public_budgets.iter().map(|b| b / 4.0).collect();
    let inner = pdp_mean_bounded_with(&shrunk.shrunk, &quarter, beta / 2.0, mode, rng)?;

    // Per-user ledger: counting spends eps_bucket / 2; the bounded stage is
    // felt through a distance-2 neighbor, so its spend doubles. Attribute
    // the worst shrunk-record spend of the user's own bucket.
    let part = partition(eps_min, eps_max)?;
    let mut worst_by_bucket = vec![0.0f64; part.len()];
    for (spend, &budget) in inner.budget_ledger.iter().zip(&shrunk.public_budgets) {
        // shrunk budgets are bucket left endpoints, so this lookup is exact
        let idx = part.bucket_of(budget).expect("endpoint lies in its bucket");
        worst_by_bucket[idx] = worst_by_bucket[idx].max(*spend);
    }
    let ledger = dataset
        .records()
        .iter()
        .map(|r| {
            let idx = part.bucket_of(r.budget).expect("validated in shrink");
            part.buckets()[idx].lo / 2.0 + 2.0 * worst_by_bucket[idx]
        })
        .collect();

    Ok(EstimationReport {
        budget_ledger: ledger,
        ..inner
    })
}
