//! `estimate-bounded` / `estimate-unbounded`: Monte Carlo trials of the two
//! end-to-end estimators with per-trial CSV rows and a JSON summary.

use serde_json::json;

use pdp_core::{
    lower_bound, pdp_mean_bounded_with, pdp_mean_unbounded_with, Dataset, EstimationReport, Model,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{csv_path, fmt_f, median, quantile, summary_path, write_csv, write_json};

use super::{Experiment, Outcome, RunContext};

/// Error-to-lower-bound envelope asserted by `--assert`.
const ENVELOPE: f64 = 50.0;

struct TrialOutcome {
    estimate: f64,
    abs_error: f64,
    range_lo: f64,
    range_hi: f64,
    bucket: f64,
    warnings: String,
    bound: f64,
}

fn synthesize(cfg: &ExperimentConfig, ctx: &RunContext, trial: u64) -> (Vec<f64>, Vec<f64>) {
    let mut data_rng = ctx.data_source(2 * trial);
    let values: Vec<f64> = (0..cfg.n)
        .map(|_| cfg.distribution.mu + cfg.distribution.sigma * data_rng.standard_normal())
        .collect();
    let budgets = cfg.budgets.resolve(cfg.n, &mut data_rng);
    (values, budgets)
}

fn record(
    cfg: &ExperimentConfig,
    report: &EstimationReport,
    budgets: &[f64],
    operation: &'static str,
) -> Result<TrialOutcome, CliError> {
    let range = report
        .range_used
        .as_ref()
        .expect("estimators always report the range they used");
    let bound = lower_bound(budgets, cfg.distribution.sigma)
        .map_err(|e| CliError::pipeline(operation, e))?;
    Ok(TrialOutcome {
        estimate: report.estimate,
        abs_error: (report.estimate - cfg.distribution.mu).abs(),
        range_lo: range.lo,
        range_hi: range.hi,
        bucket: range.bucket,
        warnings: report
            .warnings
            .iter()
            .map(|w| w.tag())
            .collect::<Vec<_>>()
            .join(";"),
        bound,
    })
}

fn run_estimation(
    ctx: &RunContext,
    name: &'static str,
    trial_fn: impl Fn(u64) -> Result<TrialOutcome, CliError> + Sync,
) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let outcomes = ctx.run_trials(cfg.trials, trial_fn)?;

    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .enumerate()
        .map(|(t, o)| {
            vec![
                t.to_string(),
                fmt_f(o.estimate),
                fmt_f(o.abs_error),
                fmt_f(o.range_lo),
                fmt_f(o.range_hi),
                fmt_f(o.bucket),
                o.warnings.clone(),
            ]
        })
        .collect();
    let csv = csv_path(&ctx.out_dir, name);
    write_csv(
        &csv,
        &ctx.provenance(),
        &[
            "trial",
            "estimate",
            "abs_error",
            "range_lo",
            "range_hi",
            "b",
            "warnings",
        ],
        &rows,
    )?;

    let errors: Vec<f64> = outcomes.iter().map(|o| o.abs_error).collect();
    let bounds: Vec<f64> = outcomes.iter().map(|o| o.bound).collect();
    let ratios: Vec<f64> = outcomes
        .iter()
        .map(|o| {
            if o.bound > 0.0 {
                o.abs_error / o.bound
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let median_ratio = median(&ratios);
    let assert_ok = median_ratio <= ENVELOPE;
    let warning_trials = outcomes.iter().filter(|o| !o.warnings.is_empty()).count();

    let summary = summary_path(&ctx.out_dir, name);
    write_json(
        &summary,
        &json!({
            "command": name,
            "config": serde_json::to_value(cfg).expect("config serializes"),
            "seed": ctx.seed,
            "trials": cfg.trials,
            "median_abs_error": median(&errors),
            "p90_abs_error": quantile(&errors, 0.9),
            "median_lower_bound": median(&bounds),
            "median_error_to_bound_ratio": median_ratio,
            "envelope": ENVELOPE,
            "envelope_ok": assert_ok,
            "warning_trials": warning_trials,
        }),
    )?;

    Ok(Outcome {
        files: vec![csv, summary],
        assert_ok,
        summary_line: format!(
            "median |err| {} over {} trials (median ratio to bound {:.2})",
            median(&errors),
            cfg.trials,
            median_ratio
        ),
    })
}

pub struct EstimateBounded;

impl Experiment for EstimateBounded {
    fn name(&self) -> &'static str {
        "estimate-bounded"
    }

    fn about(&self) -> &'static str {
        "Monte Carlo trials of the bounded-model mean estimator"
    }

    fn run(&self, ctx: &RunContext) -> Result<Outcome, CliError> {
        let cfg = ctx.config.clone();
        if cfg.model != crate::config::ModelName::Bounded {
            return Err(CliError::Config(
                "model: estimate-bounded requires \"bounded\"".into(),
            ));
        }
        let mode = cfg.rate_mode.into();
        run_estimation(ctx, self.name(), move |t| {
            let (values, budgets) = synthesize(&cfg, ctx, t);
            let ds = Dataset::from_parts(&values, &budgets, Model::Bounded)
                .map_err(|e| CliError::pipeline("dataset construction", e))?;
            let mut rng = ctx.mech_source(2 * t + 1);
            let report = pdp_mean_bounded_with(&ds, &budgets, cfg.beta, mode, &mut rng)
                .map_err(|e| CliError::pipeline("pdp_mean_bounded", e))?;
            record(&cfg, &report, &budgets, "pdp_mean_bounded")
        })
    }
}

pub struct EstimateUnbounded;

impl Experiment for EstimateUnbounded {
    fn name(&self) -> &'static str {
        "estimate-unbounded"
    }

    fn about(&self) -> &'static str {
        "Monte Carlo trials of the unbounded-model mean estimator"
    }

    fn run(&self, ctx: &RunContext) -> Result<Outcome, CliError> {
        let cfg = ctx.config.clone();
        if cfg.model != crate::config::ModelName::Unbounded {
            return Err(CliError::Config(
                "model: estimate-unbounded requires \"unbounded\"".into(),
            ));
        }
        let mode = cfg.rate_mode.into();
        let eps_min = cfg
            .eps_min
            .ok_or_else(|| CliError::Config("eps_min: required for estimate-unbounded".into()))?;
        let eps_max = cfg
            .eps_max
            .ok_or_else(|| CliError::Config("eps_max: required for estimate-unbounded".into()))?;
        run_estimation(ctx, self.name(), move |t| {
            let (values, budgets) = synthesize(&cfg, ctx, t);
            let ds = Dataset::from_parts(&values, &budgets, Model::Unbounded)
                .map_err(|e| CliError::pipeline("dataset construction", e))?;
            let mut rng = ctx.mech_source(2 * t + 1);
            let report = pdp_mean_unbounded_with(&ds, eps_min, eps_max, cfg.beta, mode, &mut rng)
                .map_err(|e| CliError::pipeline("pdp_mean_unbounded", e))?;
            // The envelope compares against the realized privacy vector.
            record(&cfg, &report, &budgets, "pdp_mean_unbounded")
        })
    }
}
