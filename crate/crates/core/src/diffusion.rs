//! Diffusion: per-record keep-or-placeholder preprocessing and its budget
//! machinery.
//!
//! A record kept with probability p under a mechanism that is eps-DP on the
//! diffused data consumes exactly ln(1 + p (e^eps - 1)) of personal budget.
//! The saturation threshold tau caps how much budget any single record can
//! usefully contribute, and the diffusing rates are set so each record's
//! consumed budget never exceeds its declared one.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Saturated view of an ascending budget vector.
///
/// `k` is the largest non-saturated prefix length, `tau` the saturation
/// threshold (sum eps_i^2 + 8) / (sum eps_i) over that prefix, and
/// `eps_tilde` equals the budgets on the prefix and tau on the suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationProfile {
    k: usize,
    tau: f64,
    eps_tilde: Vec<f64>,
    sorted_budgets: Vec<f64>,
    order: Vec<usize>,
}

impl SaturationProfile {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eps_tilde(&self) -> &[f64] {
        &self.eps_tilde
    }

    pub fn sorted_budgets(&self) -> &[f64] {
        &self.sorted_budgets
    }

    /// Permutation mapping sorted position -> original index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.eps_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_tilde.is_empty()
    }

    pub fn eps_tilde_sum(&self) -> f64 {
        self.eps_tilde.iter().sum()
    }

    /// sum of the non-saturated prefix plus (n - k) tau; the effective
    /// total budget that shows up in all rate and rank formulas.
    pub fn effective_total(&self) -> f64 {
        self.sorted_budgets[..self.k].iter().sum::<f64>() + (self.len() - self.k) as f64 * self.tau
    }
}

fn prefix_threshold(sum_sq: f64, sum: f64) -> f64 {
    (sum_sq + 8.0) / sum
}

/// Finds the smallest prefix length k whose successor budget reaches the
/// saturation threshold, and the saturated vector eps_tilde.
///
/// Budgets are sorted ascending if they are not already; the applied
/// permutation is recorded in the profile. When no successor saturates, k = n and
/// eps_tilde equals the budgets.
pub fn saturate(budgets: &[f64]) -> Result<SaturationProfile> {
    if budgets.is_empty() {
        return Err(Error::EmptyBudgets);
    }
    for &b in budgets {
        if b <= 0.0 || !b.is_finite() {
            return Err(Error::NonPositiveBudget(b));
        }
    }
    let mut order: Vec<usize> = (0..budgets.len()).collect();
    order.sort_by(|&a, &b| budgets[a].partial_cmp(&budgets[b]).expect("finite budgets"));
    let sorted: Vec<f64> = order.iter().map(|&i| budgets[i]).collect();

    let n = sorted.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut k = n;
    let mut tau = f64::NAN;
    for j in 0..n {
        sum += sorted[j];
        sum_sq += sorted[j] * sorted[j];
        let threshold = prefix_threshold(sum_sq, sum);
        if j + 1 < n && sorted[j + 1] >= threshold {
            k = j + 1;
            tau = threshold;
            break;
        }
        if j + 1 == n {
            tau = threshold;
        }
    }
    let mut eps_tilde = sorted[..k].to_vec();
    eps_tilde.resize(n, tau);
    Ok(SaturationProfile {
        k,
        tau,
        eps_tilde,
        sorted_budgets: sorted,
        order,
    })
}

/// Exact budget consumed by a record kept with probability `p` under an
/// `eps`-DP mechanism on the diffused data: ln(1 + p (e^eps - 1)).
pub fn effective_budget(p: f64, eps: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let growth = eps.exp_m1();
    if growth.is_finite() {
        (p * growth).ln_1p()
    } else {
        // eps beyond exp range: 1 + p(e^eps - 1) ~ p e^eps
        let log_pe = p.ln() + eps;
        if log_pe > 40.0 {
            log_pe
        } else {
            log_pe.exp().ln_1p()
        }
    }
}

/// How the diffusing rates are derived from the budgets.
///
/// `Paper` uses eps_i / (2 tau) on the non-saturated prefix and 1/2 above
/// it. Those rates over-consume budget whenever e^tau - 1 > 2 tau
/// (tau above about 1.256), so `Capped`, the default, additionally caps
/// each rate at (e^eps_i - 1) / (e^tau - 1), the largest rate whose exact
/// consumption still fits inside eps_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    Paper,
    Capped,
}

/// Per-record keep probabilities aligned with the ascending budget order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionPlan {
    rates: Vec<f64>,
    tau: f64,
    mode: RateMode,
}

impl DiffusionPlan {
    /// A plan from explicit keep probabilities; used by audits that probe
    /// arbitrary rate mixes rather than budget-derived ones.
    pub fn from_rates(rates: Vec<f64>, tau: f64) -> Result<Self> {
        for &r in &rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::OutOfRange(r));
            }
        }
        Ok(Self {
            rates,
            tau,
            mode: RateMode::Capped,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode(&self) -> RateMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

fn step_down(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp_m1().ln()
    }
}

/// Largest keep probability whose exact consumption under an eps-DP
/// mechanism stays within `eps`: (e^eps - 1) / (e^tau - 1), nudged down by
/// ulps until effective_budget(p, tau) <= eps holds in floating point.
fn capped_rate(eps: f64, tau: f64) -> Result<f64> {
    let mut p = (ln_expm1(eps) - ln_expm1(tau)).exp().min(1.0);
    if p.is_nan() {
        return Err(Error::BudgetOverflow(eps));
    }
    for _ in 0..128 {
        if effective_budget(p, tau) <= eps {
            return Ok(p);
        }
        p = step_down(p);
    }
    Err(Error::BudgetOverflow(eps))
}

/// Diffusing rates for the given ascending budgets and their profile.
pub fn plan_rates(
    budgets: &[f64],
    profile: &SaturationProfile,
    mode: RateMode,
) -> Result<DiffusionPlan> {
    if budgets.len() != profile.len() {
        return Err(Error::LengthMismatch {
            left: budgets.len(),
            right: profile.len(),
            what: "budgets vs saturation profile",
        });
    }
    debug_assert!(budgets.windows(2).all(|w| w[0] <= w[1]));
    let tau = profile.tau();
    let k = profile.k();
    let mut rates = Vec::with_capacity(budgets.len());
    for (i, &eps) in budgets.iter().enumerate() {
        let paper = if i < k { eps / (2.0 * tau) } else { 0.5 };
        if paper > 1.0 {
            return Err(Error::RateOverflow {
                rate: paper,
                budget: eps,
            });
        }
        let rate = match mode {
            RateMode::Paper => paper,
            RateMode::Capped => paper.min(capped_rate(eps, tau)?),
        };
        rates.push(rate);
    }
    Ok(DiffusionPlan { rates, tau, mode })
}

/// One slot of a diffused dataset: the kept value or a tagged placeholder.
///
/// Placeholders are never value-coded; stages that need a numeric stand-in
/// materialize it at their own boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Kept(f64),
    Placeholder,
}

/// Outcome of a diffusion pass, slot-aligned with the source records.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusedDataset {
    slots: Vec<Slot>,
    origin_budgets: Vec<f64>,
}

impl DiffusedDataset {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn origin_budgets(&self) -> &[f64] {
        &self.origin_budgets
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn kept_values(&self) -> Vec<f64> {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Kept(v) => Some(*v),
                Slot::Placeholder => None,
            })
            .collect()
    }

    pub fn kept_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, Slot::Kept(_)))
            .count()
    }
}

/// Keeps slot i with probability `rates[i]`, independently across slots.
///
/// The dataset must already be sorted by budget ascending so the rates
/// align with the records they were planned for.
pub fn diffuse(
    dataset: &Dataset,
    plan: &DiffusionPlan,
    rng: &mut NoiseSource,
) -> Result<DiffusedDataset> {
    if dataset.len() != plan.len() {
        return Err(Error::LengthMismatch {
            left: dataset.len(),
            right: plan.len(),
            what: "dataset vs diffusion plan",
        });
    }
    let mut slots = Vec::with_capacity(dataset.len());
    for (record, &rate) in dataset.records().iter().zip(plan.rates()) {
        if rng.keep(rate)? {
            slots.push(Slot::Kept(record.value));
        } else {
            slots.push(Slot::Placeholder);
        }
    }
    Ok(DiffusedDataset {
        slots,
        origin_budgets: dataset.budgets(),
    })
}
