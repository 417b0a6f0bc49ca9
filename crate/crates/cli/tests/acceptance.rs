//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test -p pdpmean --test acceptance -- --nocapture` to see
//! them). Every check is fully seeded, so outcomes are reproducible.

use pdp_core::audit::{mc_ratio_tail, mc_tail, ratio_bound, two_stage_bound, TwoStageParams};
use pdp_core::{
    diffuse, discretize, effective_budget, estimate_range, lower_bound, lower_bound_argmax,
    partition, pdp_mean_bounded, pdp_mean_unbounded, plan_rates, saturate, shrink, Dataset, Model,
    NoiseSource, RateMode,
};
use pdpmean::config::AuditScenario;
use pdpmean::experiments::run_audit_scenario;

fn criterion(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {id:02} {name}: {verdict} ({detail})");
    assert!(pass, "acceptance {id:02} {name}: FAIL ({detail})");
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn gaussian_values(n: usize, mu: f64, sigma: f64, rng: &mut NoiseSource) -> Vec<f64> {
    (0..n).map(|_| mu + sigma * rng.standard_normal()).collect()
}

/// Log-uniform budget draw in [lo, hi].
fn random_budgets(n: usize, lo: f64, hi: f64, rng: &mut NoiseSource) -> Vec<f64> {
    (0..n).map(|_| lo * (hi / lo).powf(rng.uniform())).collect()
}

// 1. Laplace tail: Pr(|X| >= ln(1/beta)) <= beta + 3 sqrt(beta(1-beta)/1e6).
#[test]
fn criterion_01_laplace_tail() {
    let draws = 1_000_000usize;
    let mut detail = Vec::new();
    let mut pass = true;
    for (i, &beta) in [0.1f64, 0.01].iter().enumerate() {
        let mut rng = NoiseSource::new(101, i as u64);
        let cut = (1.0 / beta).ln();
        let exceed = (0..draws)
            .filter(|_| rng.laplace(1.0).unwrap().abs() >= cut)
            .count();
        let frac = exceed as f64 / draws as f64;
        let budget = beta + 3.0 * (beta * (1.0 - beta) / draws as f64).sqrt();
        pass &= frac <= budget;
        detail.push(format!("beta={beta}: {frac:.5} <= {budget:.5}"));
    }
    criterion(1, "laplace-tail", pass, detail.join("; "));
}

// 2. Amplification identity audit: per-index eps_hat <= ln(1+p_i(e^tau -1))
//    + 0.05 at 1e6 trials, tau in {0.5, 1}, mixed rates.
#[test]
fn criterion_02_amplification_audit() {
    let rates = vec![0.1, 0.3, 0.5, 0.8, 1.0];
    let mut pass = true;
    let mut worst_margin = f64::INFINITY;
    for (i, &tau) in [0.5f64, 1.0].iter().enumerate() {
        let scenario = AuditScenario::Diffusion {
            tau,
            rates: rates.clone(),
        };
        let mut rng = NoiseSource::new(102, i as u64);
        let verdicts = run_audit_scenario(&scenario, 1_000_000, &mut rng).unwrap();
        for v in verdicts {
            let eps_hat = v.epsilon_hat.unwrap();
            let budget = v.budget.unwrap();
            pass &= !v.infinite && eps_hat <= budget + 0.05;
            worst_margin = worst_margin.min(budget + 0.05 - eps_hat);
        }
    }
    criterion(
        2,
        "amplification-identity-audit",
        pass,
        format!("10 index audits at 1e6 trials, worst margin {worst_margin:.4}"),
    );
}

// 3. Capped-rate exact compliance on 1000 random budget vectors.
#[test]
fn criterion_03_capped_rate_compliance() {
    let mut rng = NoiseSource::new(103, 0);
    let mut checked = 0usize;
    for _ in 0..1000 {
        let n = 1 + rng.index(1000);
        let mut budgets = random_budgets(n, 0.005, 3.0, &mut rng);
        budgets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let profile = saturate(&budgets).unwrap();
        let plan = plan_rates(&budgets, &profile, RateMode::Capped).unwrap();
        for (&rate, &eps) in plan.rates().iter().zip(&budgets) {
            // zero tolerance
            assert!(
                effective_budget(rate, profile.tau()) <= eps,
                "rate {rate} overspends budget {eps} at tau {}",
                profile.tau()
            );
            checked += 1;
        }
    }
    criterion(
        3,
        "capped-rate-exact-compliance",
        true,
        format!("{checked} rates across 1000 vectors, zero violations"),
    );
}

fn bucket_trial(n: usize, mu: f64, sigma: f64, seed_base: u64, t: u64) -> f64 {
    let mut data_rng = NoiseSource::new(seed_base + t, 0);
    let values = gaussian_values(n, mu, sigma, &mut data_rng);
    let budgets = vec![1.0; n];
    let profile = saturate(&budgets).unwrap();
    let plan = plan_rates(profile.sorted_budgets(), &profile, RateMode::Capped).unwrap();
    let ds = Dataset::from_parts(&values, &budgets, Model::Bounded).unwrap();
    let mut rng = NoiseSource::new(seed_base + t, 1);
    let diffused = diffuse(&ds, &plan, &mut rng).unwrap();
    let kept = diffused.kept_values();
    let (_, b) = discretize(&kept, profile.tau() / 4.0, 0.1 / 4.0, &mut rng).unwrap();
    b
}

// 4. Bucket size: b in [sigma/8, sigma] in >= 90% of 200 seeded trials,
//    for sigma in {0.01, 1, 100}, mu in {0, -50}, n = 1e4, eps = 1.
#[test]
fn criterion_04_bucket_size() {
    let n = 10_000;
    let trials = 200u64;
    let mut pass = true;
    let mut detail = Vec::new();
    let mut seed_base = 104_000;
    for &sigma in &[0.01f64, 1.0, 100.0] {
        for &mu in &[0.0f64, -50.0] {
            let hits = (0..trials)
                .filter(|&t| {
                    let b = bucket_trial(n, mu, sigma, seed_base, t);
                    sigma / 8.0 <= b && b <= sigma
                })
                .count();
            pass &= hits * 10 >= trials as usize * 9;
            detail.push(format!("(mu={mu},sigma={sigma}): {hits}/{trials}"));
            seed_base += 1000;
        }
    }
    criterion(4, "bucket-size", pass, detail.join(" "));
}

// 5. Range coverage: interval covers >= 98% of points and width <= 20 sigma
//    in >= 90% of 200 trials, same regime as criterion 4.
#[test]
fn criterion_05_range_coverage() {
    let n = 10_000;
    let trials = 200u64;
    let mut pass = true;
    let mut detail = Vec::new();
    let mut seed_base = 105_000;
    for &sigma in &[0.01f64, 1.0, 100.0] {
        for &mu in &[0.0f64, -50.0] {
            let mut hits = 0;
            for t in 0..trials {
                let mut data_rng = NoiseSource::new(seed_base + t, 0);
                let values = gaussian_values(n, mu, sigma, &mut data_rng);
                let budgets = vec![1.0; n];
                let ds = Dataset::from_parts(&values, &budgets, Model::Bounded).unwrap();
                let mut rng = NoiseSource::new(seed_base + t, 1);
                let est = estimate_range(&ds, &budgets, 0.1, &mut rng).unwrap();
                let covered = values.iter().filter(|&&x| est.covers(x)).count();
                if covered as f64 >= 0.98 * n as f64 && est.width() <= 20.0 * sigma {
                    hits += 1;
                }
            }
            pass &= hits * 10 >= trials * 9;
            detail.push(format!("(mu={mu},sigma={sigma}): {hits}/{trials}"));
            seed_base += 1000;
        }
    }
    criterion(5, "range-coverage", pass, detail.join(" "));
}

// 6. Bounded-estimator envelope: median |est - mu| <= 50 x lower bound over
//    500 trials for (n, eps) in {1e3, 1e4} x {0.5, 1}, sigma = 1; and the
//    n = 1e4 median strictly below the n = 1e3 median at each eps.
#[test]
fn criterion_06_bounded_envelope() {
    let trials = 500u64;
    let mut pass = true;
    let mut detail = Vec::new();
    let mut medians = std::collections::BTreeMap::new();
    let mut seed_base = 106_000;
    for &eps in &[0.5f64, 1.0] {
        for &n in &[1_000usize, 10_000] {
            let budgets = vec![eps; n];
            let bound = lower_bound(&budgets, 1.0).unwrap();
            let mut errors: Vec<f64> = Vec::with_capacity(trials as usize);
            for t in 0..trials {
                let mut data_rng = NoiseSource::new(seed_base + t, 0);
                let values = gaussian_values(n, 0.0, 1.0, &mut data_rng);
                let ds = Dataset::from_parts(&values, &budgets, Model::Bounded).unwrap();
                let mut rng = NoiseSource::new(seed_base + t, 1);
                // A trial that errors (the small-n cells sit at the edge of
                // the estimator's validity envelope, where a noisy scan can
                // occasionally inflate the grid past the quantile's data
                // requirement) counts as infinite error: strictly
                // conservative for the median.
                let err = match pdp_mean_bounded(&ds, &budgets, 0.1, &mut rng) {
                    Ok(report) => report.estimate.abs(),
                    Err(_) => f64::INFINITY,
                };
                errors.push(err);
            }
            let med = median(&mut errors);
            pass &= med <= 50.0 * bound;
            detail.push(format!(
                "(n={n},eps={eps}): med {med:.4} vs 50lb {:.4}",
                50.0 * bound
            ));
            medians.insert((format!("{eps}"), n), med);
            seed_base += 1000;
        }
    }
    for eps in ["0.5", "1"] {
        let small = medians[&(eps.to_string(), 1_000usize)];
        let large = medians[&(eps.to_string(), 10_000usize)];
        pass &= large < small;
        detail.push(format!(
            "eps={eps}: med(1e4) {large:.4} < med(1e3) {small:.4}"
        ));
    }
    criterion(6, "bounded-estimator-envelope", pass, detail.join(" "));
}

// 7. Lower-bound evaluator vs exhaustive-k oracle: bitwise equality.
#[test]
fn criterion_07_lower_bound_oracle() {
    let mut rng = NoiseSource::new(107, 0);
    for v in 0..1000 {
        let n = 1 + rng.index(120);
        let budgets = random_budgets(n, 0.01, 4.0, &mut rng);
        let sigma = 0.1 + 10.0 * rng.uniform();
        let (k_impl, bound_impl) = lower_bound_argmax(&budgets, sigma).unwrap();

        // oracle: exhaustive k with fresh prefix sums
        let mut sorted = budgets.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut best = (1usize, f64::NEG_INFINITY);
        for k in 1..=n {
            let prefix: f64 = sorted[..k].iter().sum();
            let base = std::f64::consts::FRAC_1_SQRT_2 / (prefix + 2.0 * ((n - k) as f64).sqrt());
            if base > best.1 {
                best = (k, base);
            }
        }
        let bound_oracle = sigma * best.1;
        assert_eq!(bound_impl, bound_oracle, "vector {v}: bound mismatch");
        assert_eq!(k_impl, best.0, "vector {v}: argmax mismatch");
    }
    criterion(
        7,
        "lower-bound-vs-brute-force",
        true,
        "1000 random vectors, exact equality".into(),
    );
}

// 8. Saturation correctness: smallest-index property by exhaustive prefix
//    scan, and idempotence, both exact.
#[test]
fn criterion_08_saturation() {
    let mut rng = NoiseSource::new(108, 0);
    for v in 0..1000 {
        let n = 1 + rng.index(150);
        let budgets = random_budgets(n, 0.01, 5.0, &mut rng);
        let profile = saturate(&budgets).unwrap();
        let sorted = profile.sorted_budgets();
        for j in 1..=n {
            let sum: f64 = sorted[..j].iter().sum();
            let sum_sq: f64 = sorted[..j].iter().map(|e| e * e).sum();
            let threshold = (sum_sq + 8.0) / sum;
            if j < profile.k() {
                assert!(
                    sorted[j] < threshold,
                    "vector {v}: prefix {j} saturates early"
                );
            } else if j == profile.k() && j < n {
                assert!(sorted[j] >= threshold, "vector {v}: k does not saturate");
                assert_eq!(profile.tau(), threshold, "vector {v}: tau mismatch");
            }
        }
        let again = saturate(profile.eps_tilde()).unwrap();
        assert_eq!(
            again.eps_tilde(),
            profile.eps_tilde(),
            "vector {v}: not idempotent"
        );
    }
    criterion(
        8,
        "saturation-correctness",
        true,
        "1000 random vectors, smallest-index + idempotence exact".into(),
    );
}

// 9. Quantile mechanism: rank error <= (4/eps) ln(|grid|/beta) in >= 1-beta
//    of 500 trials at n = 1e3, eps = 1, beta = 0.1.
#[test]
fn criterion_09_quantile_rank_error() {
    let n = 1000usize;
    let eps = 1.0;
    let beta = 0.1;
    let grid: Vec<f64> = (0..1024).map(|i| i as f64 / 1023.0).collect();
    let allowed = (4.0 / eps) * (grid.len() as f64 / beta).ln();
    let trials = 500u64;
    let rank = 500.0;
    let mut hits = 0;
    for t in 0..trials {
        let mut data_rng = NoiseSource::new(109_000 + t, 0);
        let mut values: Vec<f64> = (0..n).map(|_| data_rng.uniform()).collect();
        let mut rng = NoiseSource::new(109_000 + t, 1);
        let out = pdp_core::inverse_sensitivity_quantile(&values, rank, eps, &grid, beta, &mut rng)
            .unwrap();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo_idx = ((rank - allowed).floor().max(1.0) as usize - 1).min(n - 1);
        let hi_idx = ((rank + allowed).ceil().min(n as f64) as usize - 1).min(n - 1);
        if values[lo_idx] <= out && out <= values[hi_idx] {
            hits += 1;
        }
    }
    let pass = hits as f64 >= (1.0 - beta) * trials as f64;
    criterion(
        9,
        "quantile-rank-error",
        pass,
        format!("{hits}/{trials} within rank error {allowed:.2}"),
    );
}

// 10. Two-stage and ratio concentration: empirical tails <= bound + 3 SE at
//     every point of a 10-value t-grid, 100 random instances, 1e5 trials.
//     Instances keep m <= mu_N / 2, the regime the subsample is defined in
//     (the oracle counts trials with fewer than m survivors as tail mass).
#[test]
fn criterion_10_concentration_bounds() {
    let instances = 100u64;
    let mc_trials = 100_000usize;
    let mut worst_slack = f64::INFINITY;
    for i in 0..instances {
        let mut gen = NoiseSource::new(110_000 + i, 0);
        let n = 4 + gen.index(27);
        let p: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * gen.uniform()).collect();
        let a: Vec<f64> = (0..n).map(|_| gen.uniform()).collect();
        let mu_n: f64 = p.iter().sum();
        let m_cap = ((mu_n / 2.0).floor() as usize).clamp(1, 10);
        let m = 1 + gen.index(m_cap);
        let params = TwoStageParams::new(p, a, m).unwrap();
        let gamma = params.gamma().max(0.05);
        let mut mc_rng = NoiseSource::new(110_000 + i, 1);
        let mut ratio_rng = NoiseSource::new(110_000 + i, 2);
        for j in 1..=10 {
            let t = j as f64 / 10.0 * (m as f64 * gamma);
            let emp = mc_tail(&params, t, mc_trials, &mut mc_rng).unwrap();
            let bound = two_stage_bound(&params, t).unwrap();
            let se = (emp * (1.0 - emp) / mc_trials as f64).sqrt();
            let slack = bound + 3.0 * se - emp;
            worst_slack = worst_slack.min(slack);
            assert!(
                slack >= 0.0,
                "instance {i}: two-stage tail {emp} above bound {bound} at t={t}"
            );
            let emp_r = mc_ratio_tail(&params, t, mc_trials, &mut ratio_rng).unwrap();
            let bound_r = ratio_bound(&params, t).unwrap();
            let se_r = (emp_r * (1.0 - emp_r) / mc_trials as f64).sqrt();
            let slack_r = bound_r + 3.0 * se_r - emp_r;
            worst_slack = worst_slack.min(slack_r);
            assert!(
                slack_r >= 0.0,
                "instance {i}: ratio tail {emp_r} above bound {bound_r} at t={t}"
            );
        }
    }
    criterion(
        10,
        "concentration-bounds",
        true,
        format!("100 instances x 10 t-points x 2 bounds, min slack {worst_slack:.4}"),
    );
}

// 11. Unbounded reduction: no privacy downgrade (exact); deletion bound in
//     >= 95% of 200 trials; coupled-noise neighbor distance <= 2 on
//     exhaustive small instances; Monte Carlo envelope at n = 1e4.
#[test]
fn criterion_11_unbounded_reduction() {
    let mut detail = Vec::new();
    let mut pass = true;

    // (a) + (b): downgrade and deletion statistics on the three-level mix.
    let n = 10_000;
    let levels = [0.1, 0.4, 1.0];
    let (eps_min, eps_max) = (0.1, 1.0);
    let part = partition(eps_min, eps_max).unwrap();
    let deletion_budget = (16.0 / eps_min) * (2.0 * part.len() as f64 / 0.1f64).ln();
    let trials = 200u64;
    let mut deletion_ok = 0;
    for t in 0..trials {
        let mut data_rng = NoiseSource::new(111_000 + t, 0);
        let values = gaussian_values(n, 0.0, 1.0, &mut data_rng);
        let budgets: Vec<f64> = (0..n).map(|_| levels[data_rng.index(3)]).collect();
        let ds = Dataset::from_parts(&values, &budgets, Model::Unbounded).unwrap();
        let mut rng = NoiseSource::new(111_000 + t, 1);
        let out = shrink(&ds, eps_min, eps_max, 0.1, &mut rng).unwrap();
        for (&pub_eps, record) in out.public_budgets.iter().zip(out.shrunk.records()) {
            assert_eq!(pub_eps, record.budget);
            let idx = part.bucket_of(pub_eps).unwrap();
            assert_eq!(
                part.buckets()[idx].lo,
                pub_eps,
                "budget not a left endpoint"
            );
        }
        // exact no-downgrade: endpoints never exceed any true budget in
        // their bucket
        for r in ds.records() {
            let idx = part.bucket_of(r.budget).unwrap();
            assert!(part.buckets()[idx].lo <= r.budget);
        }
        if (out.deleted_count as f64) <= deletion_budget {
            deletion_ok += 1;
        }
    }
    pass &= deletion_ok * 100 >= trials * 95;
    detail.push(format!(
        "deletions within (16/eps_min)ln(2L/beta): {deletion_ok}/{trials}"
    ));

    // (c) coupled-noise neighbor distance on exhaustive <= 6-record
    // instances; see coupled_distance_check below.
    let max_distance = coupled_distance_check();
    pass &= max_distance <= 2;
    detail.push(format!("exhaustive coupling distance <= {max_distance}"));

    // (d) Monte Carlo envelope against the realized privacy vector.
    let env_trials = 300u64;
    let mut ratios = Vec::with_capacity(env_trials as usize);
    for t in 0..env_trials {
        let mut data_rng = NoiseSource::new(112_000 + t, 0);
        let values = gaussian_values(n, 0.0, 1.0, &mut data_rng);
        let budgets: Vec<f64> = (0..n).map(|_| levels[data_rng.index(3)]).collect();
        let ds = Dataset::from_parts(&values, &budgets, Model::Unbounded).unwrap();
        let mut rng = NoiseSource::new(112_000 + t, 1);
        let bound = lower_bound(&budgets, 1.0).unwrap();
        // errored trials count as infinite ratio (conservative)
        let ratio = match pdp_mean_unbounded(&ds, eps_min, eps_max, 0.1, &mut rng) {
            Ok(report) => report.estimate.abs() / bound,
            Err(_) => f64::INFINITY,
        };
        ratios.push(ratio);
    }
    let med_ratio = median(&mut ratios);
    pass &= med_ratio <= 50.0;
    detail.push(format!("median error / lower bound = {med_ratio:.2} <= 50"));

    criterion(11, "unbounded-reduction", pass, detail.join("; "));
}

/// Exhaustive change-distance check for the shrink transformation: for
/// every dataset of at most 5 records over three budget levels, one added
/// user u, and every combination of shared per-bucket count noise, the
/// shrunk datasets of D and D + u differ in at most 2 elements under the
/// explicit coupling of the without-replacement samplers. Returns the
/// largest distance observed.
fn coupled_distance_check() -> usize {
    // T = 7.9 keeps floor(log2 T) = 2: three buckets
    // [0.1, 0.2), [0.2, 0.4), [0.4, 0.79].
    let (eps_min, eps_max) = (0.1, 0.79);
    let part = partition(eps_min, eps_max).unwrap();
    let n_buckets = part.len();
    assert_eq!(n_buckets, 3);
    let bucket_levels = [0.1, 0.25, 0.5];
    let beta = 0.2;
    // Shared per-bucket Laplace draws. Desk-scale pools need large positive
    // draws to survive the truncation offset, so the grid spans truncated
    // counts, exact fits, and zero-padding.
    let noise_values = [-0.7f64, 3.3, 3.5, 3.9];

    let mut max_distance = 0usize;
    // datasets of size 0..=5: records identified by index, budgets by level
    for size in 0..=5usize {
        let mut assignment = vec![0usize; size];
        loop {
            // bucket pools of record ids
            let mut pools: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
            for (id, &level) in assignment.iter().enumerate() {
                pools[level].push(id);
            }
            for u_level in 0..n_buckets {
                // only u's bucket matters: the others share pools, counts,
                // and draws, so their samples are identical
                for &z in &noise_values {
                    let d = coupled_worst_distance(&pools, u_level, z, &part, beta);
                    max_distance = max_distance.max(d);
                }
            }
            // advance assignment counter
            let mut carry = true;
            for a in assignment.iter_mut() {
                if carry {
                    *a += 1;
                    if *a == bucket_levels.len() {
                        *a = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        if size == 0 {
            continue;
        }
    }
    max_distance
}

/// Truncated count with a fixed (shared) noise value.
fn fixed_noise_count(
    true_count: usize,
    bucket_eps: f64,
    n_buckets: usize,
    beta: f64,
    z: f64,
) -> usize {
    let scale = 2.0 / bucket_eps;
    let offset = scale * (2.0 * n_buckets as f64 / beta).ln();
    (true_count as f64 + z * scale - offset).floor().max(0.0) as usize
}

// sentinel ids: the added user and the zero-padding placeholder
const U_ID: usize = usize::MAX;
const PAD_ID: usize = usize::MAX - 1;

/// Worst-case coupled distance for one instance: enumerates every
/// m-subset the sampler could pick for D and every branch of the explicit
/// coupling for D' = D + u in u's bucket. With the count draw shared, the
/// released counts differ by at most one; the coupling then either keeps
/// the sample, swaps one slot for u, or appends one element (u, a fresh
/// pool element, or a pad).
fn coupled_worst_distance(
    pools: &[Vec<usize>],
    u_level: usize,
    z: f64,
    part: &pdp_core::PrivacyPartition,
    beta: f64,
) -> usize {
    let n_buckets = pools.len();
    let bucket_eps = part.buckets()[u_level].lo;
    let pool = &pools[u_level];
    let m = fixed_noise_count(pool.len(), bucket_eps, n_buckets, beta, z);
    let m_prime = fixed_noise_count(pool.len() + 1, bucket_eps, n_buckets, beta, z);
    assert!(
        m_prime == m || m_prime == m + 1,
        "shared noise must move the count by at most 1"
    );

    let take = m.min(pool.len());
    let mut worst = 0usize;
    for subset in subsets_of_size(pool.len(), take) {
        // the realized sample for D, padded with zeros up to m
        let mut s: Vec<usize> = subset.iter().map(|&i| pool[i]).collect();
        s.resize(m, PAD_ID);

        let mut branches: Vec<Vec<usize>> = Vec::new();
        if m_prime == m {
            // counts clamped equal (both zero here): identical, or u swaps
            // into one slot
            branches.push(s.clone());
            for drop in 0..s.len() {
                let mut b = s.clone();
                b[drop] = U_ID;
                branches.push(b);
            }
        } else {
            // one more slot on the D' side: u joins, or an unsampled pool
            // element joins, or (pool exhausted) a pad joins
            let mut with_u = s.clone();
            with_u.push(U_ID);
            branches.push(with_u);
            let complement: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|id| !subset.iter().any(|&i| pool[i] == *id))
                .collect();
            if complement.is_empty() {
                let mut b = s.clone();
                b.push(PAD_ID);
                branches.push(b);
            } else {
                for extra in complement {
                    let mut b = s.clone();
                    b.push(extra);
                    branches.push(b);
                }
            }
        }
        for branch in branches {
            let inter = multiset_intersection(&s, &branch);
            let d = s.len().max(branch.len()) - inter;
            worst = worst.max(d);
        }
    }
    worst
}

fn multiset_intersection(a: &[usize], b: &[usize]) -> usize {
    let mut b_rest = b.to_vec();
    let mut count = 0;
    for x in a {
        if let Some(pos) = b_rest.iter().position(|y| y == x) {
            b_rest.swap_remove(pos);
            count += 1;
        }
    }
    count
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        if n - start < k - current.len() {
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

// 12. Reproducibility: every subcommand emits byte-identical outputs across
//     two runs with the same seed.
#[test]
fn criterion_12_reproducibility() {
    use std::fs;
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_pdpmean");
    let work = tempfile::tempdir().unwrap();
    let configs: &[(&str, &str)] = &[
        (
            "lowerbound",
            r#"{"seed": 21, "n": 100, "budgets": {"uniform": 1.0},
                "distribution": {"mu": 0.0, "sigma": 1.0}}"#,
        ),
        (
            "estimate-bounded",
            r#"{"seed": 22, "trials": 3, "n": 2000, "beta": 0.1,
                "budgets": {"uniform": 1.0}, "distribution": {"mu": 5.0, "sigma": 1.0}}"#,
        ),
        (
            "estimate-unbounded",
            r#"{"seed": 23, "trials": 2, "n": 10000, "beta": 0.1, "model": "unbounded",
                "eps_min": 0.1, "eps_max": 1.0,
                "budgets": {"categorical": {"values": [0.1, 0.4, 1.0]}},
                "distribution": {"mu": 0.0, "sigma": 1.0}}"#,
        ),
        (
            "sweep",
            r#"{"seed": 24, "trials": 2, "beta": 0.1,
                "sweep": {"n": [2000], "eps": [1.0], "sigma": [1.0]}}"#,
        ),
        (
            "audit",
            r#"{"seed": 25, "audit": {"trials": 20000, "scenarios": [
                {"kind": "identical"},
                {"kind": "laplace_count", "epsilon": 0.5},
                {"kind": "deterministic_size"},
                {"kind": "diffusion", "tau": 0.5, "rates": [0.25, 1.0]}]}}"#,
        ),
        (
            "check-concentration",
            r#"{"seed": 26, "concentration": {"instances": 2, "mc_trials": 20000,
                "t_points": 3}}"#,
        ),
    ];

    let mut compared_files = 0usize;
    for (name, config) in configs {
        let config_path = work.path().join(format!("{name}.json"));
        fs::write(&config_path, config).unwrap();
        let mut outputs: Vec<std::collections::BTreeMap<String, Vec<u8>>> = Vec::new();
        for run in 0..2 {
            let out_dir = work.path().join(format!("{name}_{run}"));
            // alternate thread counts: outputs must not depend on them
            let threads = if run == 0 { "1" } else { "4" };
            let status = Command::new(bin)
                .args([
                    name,
                    "--config",
                    config_path.to_str().unwrap(),
                    "--out",
                    out_dir.to_str().unwrap(),
                    "--threads",
                    threads,
                ])
                .output()
                .unwrap();
            assert!(
                status.status.success(),
                "{name} run {run} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            let mut files = std::collections::BTreeMap::new();
            for entry in fs::read_dir(&out_dir).unwrap() {
                let entry = entry.unwrap();
                files.insert(
                    entry.file_name().to_string_lossy().into_owned(),
                    fs::read(entry.path()).unwrap(),
                );
            }
            assert!(!files.is_empty(), "{name} produced no output files");
            outputs.push(files);
        }
        assert_eq!(
            outputs[0].keys().collect::<Vec<_>>(),
            outputs[1].keys().collect::<Vec<_>>(),
            "{name}: file sets differ"
        );
        for (file, bytes) in &outputs[0] {
            assert_eq!(
                bytes,
                outputs[1].get(file).unwrap(),
                "{name}: {file} differs between runs"
            );
            compared_files += 1;
        }
    }
    criterion(
        12,
        "reproducibility",
        true,
        format!("6 subcommands, {compared_files} files byte-identical across thread counts"),
    );
}
