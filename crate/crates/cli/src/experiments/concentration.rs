//! `check-concentration`: random-instance comparisons of the two-stage and
//! ratio concentration bounds against their Monte Carlo oracles.

use serde_json::json;

use pdp_core::audit::{mc_ratio_tail, mc_tail, ratio_bound, two_stage_bound, TwoStageParams};
use pdp_core::NoiseSource;

use crate::error::CliError;
use crate::output::{csv_path, fmt_f, summary_path, write_csv, write_json};

use super::{Experiment, Outcome, RunContext};

pub struct CheckConcentration;

fn random_instance(rng: &mut NoiseSource) -> TwoStageParams {
    let n = 4 + rng.index(27); // n <= 30
    let p: Vec<f64> = (0..n).map(|_| 0.1 + 0.9 * rng.uniform()).collect();
    let a: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    // The subsample needs m survivors; keep m at or below mu_N / 2 (and
    // <= 10), the regime where trials short of m stay inside the bound's
    // Poisson-count term.
    let mu_n: f64 = p.iter().sum();
    let m_cap = ((mu_n / 2.0).floor() as usize).clamp(1, 10);
    let m = 1 + rng.index(m_cap);
    TwoStageParams::new(p, a, m).expect("generated parameters are consistent")
}

struct GridRow {
    instance: usize,
    kind: &'static str,
    n: usize,
    m: usize,
    t: f64,
    empirical: f64,
    bound: f64,
    pass: bool,
}

impl Experiment for CheckConcentration {
    fn name(&self) -> &'static str {
        "check-concentration"
    }

    fn about(&self) -> &'static str {
        "Compare concentration bounds against Monte Carlo tails on random instances"
    }

    fn run(&self, ctx: &RunContext) -> Result<Outcome, CliError> {
        let cfg = &ctx.config;
        let section = cfg
            .concentration
            .clone()
            .unwrap_or(crate::config::ConcentrationSection {
                instances: 100,
                mc_trials: 100_000,
                t_points: 10,
            });
        let op = "check-concentration";

        let per_instance = ctx.run_trials(section.instances, |i| {
            let mut gen = ctx.data_source(3 * i);
            let params = random_instance(&mut gen);
            let mut mc_rng = ctx.mech_source(3 * i + 1);
            let mut ratio_rng = ctx.mech_source(3 * i + 2);
            let gamma = params.gamma().max(0.05);
            let m = params.m();
            let mut rows = Vec::with_capacity(2 * section.t_points);
            for j in 1..=section.t_points {
                let t = j as f64 / section.t_points as f64 * (m as f64 * gamma);
                let emp = mc_tail(&params, t, section.mc_trials, &mut mc_rng)
                    .map_err(|e| CliError::pipeline(op, e))?;
                let bound = two_stage_bound(&params, t).map_err(|e| CliError::pipeline(op, e))?;
                let se = (emp * (1.0 - emp) / section.mc_trials as f64).sqrt();
                rows.push(GridRow {
                    instance: i as usize,
                    kind: "two_stage",
                    n: params.n(),
                    m,
                    t,
                    empirical: emp,
                    bound,
                    pass: emp <= bound + 3.0 * se,
                });
                let emp_r = mc_ratio_tail(&params, t, section.mc_trials, &mut ratio_rng)
                    .map_err(|e| CliError::pipeline(op, e))?;
                let bound_r = ratio_bound(&params, t).map_err(|e| CliError::pipeline(op, e))?;
                let se_r = (emp_r * (1.0 - emp_r) / section.mc_trials as f64).sqrt();
                rows.push(GridRow {
                    instance: i as usize,
                    kind: "ratio",
                    n: params.n(),
                    m,
                    t,
                    empirical: emp_r,
                    bound: bound_r,
                    pass: emp_r <= bound_r + 3.0 * se_r,
                });
            }
            Ok(rows)
        })?;

        let rows: Vec<GridRow> = per_instance.into_iter().flatten().collect();
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.instance.to_string(),
                    r.kind.to_string(),
                    r.n.to_string(),
                    r.m.to_string(),
                    fmt_f(r.t),
                    fmt_f(r.empirical),
                    fmt_f(r.bound),
                    r.pass.to_string(),
                ]
            })
            .collect();
        let csv = csv_path(&ctx.out_dir, self.name());
        write_csv(
            &csv,
            &ctx.provenance(),
            &[
                "instance",
                "kind",
                "n",
                "m",
                "t",
                "empirical",
                "bound",
                "pass",
            ],
            &csv_rows,
        )?;

        let failures = rows.iter().filter(|r| !r.pass).count();
        let all_pass = failures == 0;
        let summary = summary_path(&ctx.out_dir, self.name());
        write_json(
            &summary,
            &json!({
                "command": self.name(),
                "config": serde_json::to_value(cfg).expect("config serializes"),
                "seed": ctx.seed,
                "instances": section.instances,
                "mc_trials": section.mc_trials,
                "grid_points": rows.len(),
                "violations": failures,
                "all_pass": all_pass,
            }),
        )?;
        Ok(Outcome {
            files: vec![csv, summary],
            assert_ok: all_pass,
            summary_line: format!("{} grid points, {} violations", rows.len(), failures),
        })
    }
}
