//! `estimate`: point estimates with bootstrap inference for one cohort.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;
use tir_core::estimators::{
    estimate_pg_simplified, mean_tir_from_pg, naive_mean_tir, proposed_pipeline, subject_tir_oracle,
    EstimateOptions, PgCurve,
};
use tir_core::inference::{bootstrap_estimates, BootstrapOptions};
use tir_core::survival::CoxFit;
use tir_core::{Cohort, TargetRange, TimeGrid};

use crate::data::{load_cohort, GroupInput};
use crate::opts::{CommonOpts, MethodArg, ModeArg};
use crate::ranges::{parse_ranges, parse_taus};
use crate::report::{pct_pm, render_table};

/// One summary cell, shared by the CSV and JSON outputs.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub method: String,
    pub range: String,
    pub tau_days: f64,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub ci_percentile_lo: f64,
    pub ci_percentile_hi: f64,
    pub bootstrap_failures: usize,
}

#[derive(Debug, Serialize)]
struct TauDiagnostics {
    tau_days: f64,
    floor_activations: usize,
    cox_fit: Option<CoxFit>,
}

#[derive(Debug, Serialize)]
struct EstimateDocument {
    group: String,
    mode: String,
    bootstrap_b: usize,
    seed: u64,
    weight_floor: f64,
    rows: Vec<EstimateRow>,
    diagnostics: Vec<TauDiagnostics>,
}

/// The concrete estimators an `estimate`/`compare` run can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcreteMethod {
    Naive,
    Simplified,
    Proposed,
    Oracle,
}

impl ConcreteMethod {
    pub fn name(self) -> &'static str {
        match self {
            ConcreteMethod::Naive => "naive",
            ConcreteMethod::Simplified => "simplified",
            ConcreteMethod::Proposed => "proposed",
            ConcreteMethod::Oracle => "oracle",
        }
    }

    /// Point estimates over `ranges`; the closure form used by the bootstrap.
    pub fn estimate(
        self,
        cohort: &Cohort,
        ranges: &[TargetRange],
        options: &EstimateOptions,
    ) -> tir_core::Result<Vec<f64>> {
        match self {
            ConcreteMethod::Naive => ranges.iter().map(|r| naive_mean_tir(cohort, r)).collect(),
            ConcreteMethod::Simplified => {
                let curves = estimate_pg_simplified(cohort, ranges)?;
                Ok(curves.iter().map(mean_tir_from_pg).collect())
            }
            ConcreteMethod::Proposed => {
                let out = proposed_pipeline(cohort, ranges, options)?;
                Ok(out.estimates.iter().map(|e| e.mu_hat).collect())
            }
            ConcreteMethod::Oracle => ranges
                .iter()
                .map(|r| {
                    let per: tir_core::Result<Vec<f64>> = cohort
                        .trajectories
                        .iter()
                        .map(|t| subject_tir_oracle(t, r))
                        .collect();
                    per.map(|v| v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect(),
        }
    }
}

/// Expands the `--method` flag; `all` includes the oracle only when the data
/// are fully observed (otherwise it is undefined).
pub fn expand_methods(method: MethodArg, fully_observed: bool) -> Vec<ConcreteMethod> {
    match method {
        MethodArg::Naive => vec![ConcreteMethod::Naive],
        MethodArg::Simplified => vec![ConcreteMethod::Simplified],
        MethodArg::Proposed => vec![ConcreteMethod::Proposed],
        MethodArg::Oracle => vec![ConcreteMethod::Oracle],
        MethodArg::All => {
            let mut methods = vec![
                ConcreteMethod::Naive,
                ConcreteMethod::Simplified,
                ConcreteMethod::Proposed,
            ];
            if fully_observed {
                methods.insert(0, ConcreteMethod::Oracle);
            }
            methods
        }
    }
}

pub fn run(opts: CommonOpts) -> Result<()> {
    let opts = opts.merged()?;
    let readings = opts
        .readings
        .clone()
        .context("estimate needs --readings (flag or config file)")?;
    let followups = opts
        .followups
        .clone()
        .context("estimate needs --followups (flag or config file)")?;
    let input = GroupInput {
        label: opts.label.clone().unwrap_or_else(|| "cohort".into()),
        readings,
        followups,
        covariates: opts.covariates.clone(),
    };
    let ranges = parse_ranges(opts.ranges.as_deref().unwrap_or("standard3"))?;
    let taus = parse_taus(opts.tau_days.as_deref().unwrap_or("7"))?;
    let step = opts.step_minutes.unwrap_or(5.0);
    let method = opts.method.unwrap_or(MethodArg::All);
    let mode = opts.mode.unwrap_or(ModeArg::Cox);
    let seed = opts.seed.unwrap_or(0);
    let b = opts.bootstrap_b.unwrap_or(200);
    let est_options = EstimateOptions {
        model: mode.into(),
        weight_floor: opts.weight_floor.unwrap_or(0.01),
        ..EstimateOptions::default()
    };
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut rows: Vec<EstimateRow> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut curve_rows: Vec<(f64, PgCurve)> = Vec::new();

    for &tau in &taus {
        let grid = Arc::new(TimeGrid::new(step, tau)?);
        let cohort = load_cohort(&input, &grid, opts.min_followup_days.unwrap_or(0.0))?;
        let fully_observed = cohort.trajectories.iter().all(|t| t.is_fully_observed());
        let methods = expand_methods(method, fully_observed);
        let boot = BootstrapOptions {
            b,
            seed,
            ..BootstrapOptions::default()
        };
        for &m in &methods {
            let result = bootstrap_estimates(&cohort, &boot, |c: &Cohort| {
                m.estimate(c, &ranges, &est_options)
            })
            .with_context(|| format!("{} estimator at tau = {tau} days", m.name()))?;
            for (r, range) in ranges.iter().enumerate() {
                rows.push(EstimateRow {
                    method: m.name().into(),
                    range: range.label(),
                    tau_days: tau,
                    estimate: result.point[r],
                    se: result.se[r],
                    ci_lo: result.ci_normal[r].0,
                    ci_hi: result.ci_normal[r].1,
                    ci_percentile_lo: result.ci_percentile[r].0,
                    ci_percentile_hi: result.ci_percentile[r].1,
                    bootstrap_failures: result.failures,
                });
            }
        }
        // pointwise curves and fit diagnostics from one extra pass: weighted
        // when the weighted estimator was requested, unweighted otherwise
        if methods.contains(&ConcreteMethod::Proposed) {
            let pipeline = proposed_pipeline(&cohort, &ranges, &est_options)
                .with_context(|| format!("weighted pipeline at tau = {tau} days"))?;
            diagnostics.push(TauDiagnostics {
                tau_days: tau,
                floor_activations: pipeline.floor_activations,
                cox_fit: pipeline.cox_fit,
            });
            curve_rows.extend(pipeline.curves.into_iter().map(|c| (tau, c)));
        } else {
            let curves = estimate_pg_simplified(&cohort, &ranges)
                .with_context(|| format!("pooled curves at tau = {tau} days"))?;
            diagnostics.push(TauDiagnostics {
                tau_days: tau,
                floor_activations: 0,
                cox_fit: None,
            });
            curve_rows.extend(curves.into_iter().map(|c| (tau, c)));
        }
    }

    write_estimates_csv(&out_dir.join("estimates.csv"), &rows)?;
    let document = EstimateDocument {
        group: input.label.clone(),
        mode: format!("{}", est_options.model),
        bootstrap_b: b,
        seed,
        weight_floor: est_options.weight_floor,
        rows,
        diagnostics,
    };
    write_json(&out_dir.join("estimates.json"), &document)?;
    write_pg_curves(&out_dir.join("pg_curve.csv"), &curve_rows, step)?;

    print!("{}", summary_table(&document.rows));
    Ok(())
}

fn summary_table(rows: &[EstimateRow]) -> String {
    let header: Vec<String> = ["tau_days", "range", "method", "estimate (%)"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("{}", r.tau_days),
                r.range.clone(),
                r.method.clone(),
                pct_pm(r.estimate, r.se),
            ]
        })
        .collect();
    render_table(&header, &body)
}

pub fn write_estimates_csv(path: &Path, rows: &[EstimateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "method",
        "range",
        "tau_days",
        "estimate",
        "se",
        "ci_lo",
        "ci_hi",
    ])?;
    for r in rows {
        w.write_record([
            r.method.as_str(),
            r.range.as_str(),
            &format!("{}", r.tau_days),
            &format!("{}", r.estimate),
            &format!("{}", r.se),
            &format!("{}", r.ci_lo),
            &format!("{}", r.ci_hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_pg_curves(path: &Path, curves: &[(f64, PgCurve)], step_minutes: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["tau_days", "range", "time_minutes", "p_g"])?;
    for (tau, curve) in curves {
        let label = curve.range.label();
        for (j, v) in curve.values.iter().enumerate() {
            w.write_record([
                &format!("{tau}"),
                label.as_str(),
                &format!("{}", j as f64 * step_minutes),
                &format!("{v}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
