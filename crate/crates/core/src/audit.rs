//! Empirical privacy auditing and concentration-bound evaluation.
//!
//! The auditor is a falsifier, not a verifier: it histograms mechanism
//! outputs on two declared neighbors and reports the plug-in divergence
//! max over bins of |ln((p + lambda)/(q + lambda))| with additive smoothing.
//! The bound evaluators compute the two-stage-sampling and ratio
//! concentration expressions; `mc_tail` is the brute-force oracle both are
//! checked against.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Output binning for the auditor.
#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// `n` equal-width bins over [lo, hi]; outputs outside clamp to the
    /// outermost bins.
    EqualWidth { n: usize, lo: f64, hi: f64 },
    /// Bins separated by the given ascending edges (k edges, k+1 bins).
    Edges(Vec<f64>),
}

impl Binning {
    pub fn n_bins(&self) -> usize {
        match self {
            Binning::EqualWidth { n, .. } => *n,
            Binning::Edges(edges) => edges.len() + 1,
        }
    }

    pub fn bin_of(&self, x: f64) -> usize {
        match self {
            Binning::EqualWidth { n, lo, hi } => {
                let t = (x - lo) / (hi - lo) * *n as f64;
                (t.floor().max(0.0) as usize).min(n - 1)
            }
            Binning::Edges(edges) => edges.partition_point(|&e| e <= x),
        }
    }
}

/// Auditing knobs. Reported audits require at least 1e4 trials.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub trials: usize,
    pub binning: Binning,
    /// Additive pseudo-count per bin.
    pub smoothing: f64,
    /// Acceptable sampling slack added to the theoretical budget when a
    /// verdict is formed.
    pub slack: f64,
}

impl AuditConfig {
    pub fn new(trials: usize, binning: Binning) -> Self {
        Self {
            trials,
            binning,
            smoothing: 1.0,
            slack: 0.05,
        }
    }
}

/// Plug-in privacy-loss estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonHat {
    Finite(f64),
    /// One side's histogram carries a bin the other side never hits.
    Infinite,
}

impl EpsilonHat {
    pub fn is_infinite(&self) -> bool {
        matches!(self, EpsilonHat::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            EpsilonHat::Finite(v) => *v,
            EpsilonHat::Infinite => f64::INFINITY,
        }
    }
}

/// Estimates the realized privacy loss of `mechanism` between two declared
/// neighbors by sampling `cfg.trials` outputs from each.
pub fn estimate_epsilon_hat<F>(
    mut mechanism: F,
    d: &Dataset,
    d_prime: &Dataset,
    cfg: &AuditConfig,
    rng: &mut NoiseSource,
) -> Result<EpsilonHat>
where
    F: FnMut(&Dataset, &mut NoiseSource) -> Result<f64>,
{
    let bins = cfg.binning.n_bins();
    if bins < 2 {
        return Err(Error::InconsistentParams("audit needs at least 2 bins"));
    }
    if cfg.trials < 10_000 {
        return Err(Error::ScaleTooLarge("reported audits need >= 1e4 trials"));
    }
    let mut h1 = vec![0u64; bins];
    let mut h2 = vec![0u64; bins];
    for _ in 0..cfg.trials {
        h1[cfg.binning.bin_of(mechanism(d, rng)?)] += 1;
        h2[cfg.binning.bin_of(mechanism(d_prime, rng)?)] += 1;
    }
    if (0..bins).any(|b| h1[b] as usize == cfg.trials && h2[b] as usize == cfg.trials) {
        return Err(Error::DegenerateBinning);
    }
    let lambda = cfg.smoothing;
    let disjoint = (0..bins).any(|b| {
        (h1[b] == 0 && h2[b] as f64 > 10.0 * lambda) || (h2[b] == 0 && h1[b] as f64 > 10.0 * lambda)
    });
    if disjoint {
        return Ok(EpsilonHat::Infinite);
    }
    let eps_hat = (0..bins)
        .map(|b| {
            let ratio = (h1[b] as f64 + lambda) / (h2[b] as f64 + lambda);
            ratio.ln().abs()
        })
        .fold(0.0, f64::max);
    Ok(EpsilonHat::Finite(eps_hat))
}

/// Population and sampling description for the two-stage scheme: Poisson
/// sampling with probabilities `p` over values `a` in [0, 1], then a
/// without-replacement subsample of size `m`.
///
/// Derived quantities are recomputed on demand, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageParams {
    p: Vec<f64>,
    a: Vec<f64>,
    m: usize,
}

impl TwoStageParams {
    pub fn new(p: Vec<f64>, a: Vec<f64>, m: usize) -> Result<Self> {
        if p.is_empty() || p.len() != a.len() {
            return Err(Error::InconsistentParams(
                "p and a must align and be nonempty",
            ));
        }
        if p.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::InconsistentParams("p must lie in (0, 1]"));
        }
        if a.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InconsistentParams("a must lie in [0, 1]"));
        }
        if m == 0 {
            return Err(Error::InconsistentParams("m must be positive"));
        }
        Ok(Self { p, a, m })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// mu_N = sum p_i
    pub fn mu_n(&self) -> f64 {
        self.p.iter().sum()
    }

    /// mu_T = sum p_i a_i / mu_N
    pub fn mu_t(&self) -> f64 {
        self.p.iter().zip(&self.a).map(|(p, a)| p * a).sum::<f64>() / self.mu_n()
    }

    /// eta = max_i n p_i / mu_N
    pub fn eta(&self) -> f64 {
        let n = self.n() as f64;
        let mu_n = self.mu_n();
        self.p.iter().cloned().fold(0.0, f64::max) * n / mu_n
    }

    /// gamma(A): width of the value population.
    pub fn gamma(&self) -> f64 {
        let max = self.a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.a.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// sigma^2(A): population variance of the values.
    pub fn var_a(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.a.iter().sum::<f64>() / n;
        self.a.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n
    }

    /// w_max = max_i p_i / mu_N
    pub fn w_max(&self) -> f64 {
        self.p.iter().cloned().fold(0.0, f64::max) / self.mu_n()
    }
}

fn exp_ratio_term(numer: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        // degenerate population: the Bernstein term vanishes for any t > 0
        if numer > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        (-numer / denom).exp()
    }
}

/// Unclamped three-exponential tail bound on Pr(T - m mu_T >= t) under the
/// two-stage sampling scheme.
pub fn two_stage_bound_raw(params: &TwoStageParams, t: f64) -> Result<f64> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::InconsistentParams("t must be positive"));
    }
    let (m, n) = (params.m() as f64, params.n() as f64);
    let mu_n = params.mu_n();
    let var = params.var_a();
    let gamma = params.gamma();
    let eta = params.eta();
    let first = exp_ratio_term(t * t, 16.0 * m * n * var / mu_n + (8.0 / 3.0) * gamma * t);
    let second = exp_ratio_term(
        t * t * mu_n,
        32.0 * m * m * eta * var + (16.0 / 3.0) * gamma * m * t,
    );
    let third = (-mu_n / 4.0).exp();
    Ok(first + second + third)
}

/// [`two_stage_bound_raw`] clamped to [0, 3] for presentation (the raw sum
/// of three exponentials is an upper bound, not a probability).
pub fn two_stage_bound(params: &TwoStageParams, t: f64) -> Result<f64> {
    Ok(two_stage_bound_raw(params, t)?.clamp(0.0, 3.0))
}

/// Unclamped bound on Pr(m (mu_S - mu_T) >= t) for the Poisson-sample mean.
pub fn ratio_bound_raw(params: &TwoStageParams, t: f64) -> Result<f64> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::InconsistentParams("t must be positive"));
    }
    let (m, n) = (params.m() as f64, params.n() as f64);
    let mu_n = params.mu_n();
    let first = exp_ratio_term(
        t * t * mu_n,
        8.0 * m * m * n * params.w_max() * params.var_a() + (4.0 / 3.0) * params.gamma() * m * t,
    );
    Ok(first + (-mu_n / 8.0).exp())
}

/// [`ratio_bound_raw`] clamped to [0, 2].
pub fn ratio_bound(params: &TwoStageParams, t: f64) -> Result<f64> {
    Ok(ratio_bound_raw(params, t)?.clamp(0.0, 2.0))
}

/// Brute-force tail oracle: simulates Poisson sampling followed by a
/// without-replacement subsample of size m and returns the empirical
/// Pr(T - m mu_T >= t). Trials where fewer than m elements survive the
/// first stage count toward the tail.
pub fn mc_tail(
    params: &TwoStageParams,
    t: f64,
    trials: usize,
    rng: &mut NoiseSource,
) -> Result<f64> {
    if params.n() > 64 {
        return Err(Error::ScaleTooLarge("mc_tail is desk scale: n <= 64"));
    }
    if trials < 10_000 {
        return Err(Error::ScaleTooLarge("mc_tail needs >= 1e4 trials"));
    }
    let m = params.m();
    let shift = m as f64 * params.mu_t();
    let mut hits = 0usize;
    let mut kept: Vec<f64> = Vec::with_capacity(params.n());
    for _ in 0..trials {
        kept.clear();
        for (&p, &a) in params.p().iter().zip(params.a()) {
            if rng.keep(p)? {
                kept.push(a);
            }
        }
        if kept.len() < m {
            hits += 1;
            continue;
        }
        let mut total = 0.0;
        for i in 0..m {
            let j = i + rng.index(kept.len() - i);
            kept.swap(i, j);
            total += kept[i];
        }
        if total - shift >= t {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Brute-force oracle for the ratio statistic: empirical
/// Pr(m (mu_S - mu_T) >= t) under Poisson sampling, where mu_S is the mean
/// over the realized sample. Empty samples count toward the tail.
pub fn mc_ratio_tail(
    params: &TwoStageParams,
    t: f64,
    trials: usize,
    rng: &mut NoiseSource,
) -> Result<f64> {
    if params.n() > 64 {
        return Err(Error::ScaleTooLarge("mc_ratio_tail is desk scale: n <= 64"));
    }
    if trials < 10_000 {
        return Err(Error::ScaleTooLarge("mc_ratio_tail needs >= 1e4 trials"));
    }
    let m = params.m() as f64;
    let mu_t = params.mu_t();
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&p, &a) in params.p().iter().zip(params.a()) {
            if rng.keep(p)? {
                sum += a;
                count += 1;
            }
        }
        if count == 0 {
            hits += 1;
            continue;
        }
        if m * (sum / count as f64 - mu_t) >= t {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
