//! `compare`: Wald group comparisons of mean TIR with bootstrap inference.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use serde::Serialize;
use tir_core::estimators::EstimateOptions;
use tir_core::inference::{bootstrap_estimates, wald_tests, BootstrapOptions};
use tir_core::{Cohort, TimeGrid};

use crate::commands::estimate::{expand_methods, write_json, ConcreteMethod};
use crate::data::{load_cohort, parse_group_spec};
use crate::opts::{CommonOpts, MethodArg, ModeArg};
use crate::ranges::{parse_ranges, parse_taus};
use crate::report::{pct_pm, pvalue, render_table};

#[derive(Debug, Serialize)]
struct RangeComparison {
    range: String,
    /// Point estimate per group, aligned with the document's `groups` order.
    estimates: Vec<f64>,
    ses: Vec<f64>,
    /// Differences against the last group.
    contrast: Vec<f64>,
    /// Bootstrap covariance of the contrast, row-major.
    covariance: Vec<f64>,
    statistic: f64,
    df: u32,
    p_value: f64,
}

#[derive(Debug, Serialize)]
struct ComparisonBlock {
    tau_days: f64,
    method: String,
    ranges: Vec<RangeComparison>,
}

#[derive(Debug, Serialize)]
struct CompareDocument {
    groups: Vec<String>,
    mode: String,
    bootstrap_b: usize,
    seed: u64,
    weight_floor: f64,
    comparisons: Vec<ComparisonBlock>,
}

pub fn run(opts: CommonOpts) -> Result<()> {
    let opts = opts.merged()?;
    ensure!(
        opts.groups.len() >= 2,
        "compare needs at least two --group datasets, got {}",
        opts.groups.len()
    );
    let inputs = opts
        .groups
        .iter()
        .map(|g| parse_group_spec(g))
        .collect::<Result<Vec<_>>>()?;
    let ranges = parse_ranges(opts.ranges.as_deref().unwrap_or("standard3"))?;
    let taus = parse_taus(opts.tau_days.as_deref().unwrap_or("7"))?;
    let step = opts.step_minutes.unwrap_or(5.0);
    let method = opts.method.unwrap_or(MethodArg::Proposed);
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

    let labels: Vec<String> = inputs.iter().map(|g| g.label.clone()).collect();
    let mut comparisons = Vec::new();
    let mut table_rows: Vec<Vec<String>> = Vec::new();

    for &tau in &taus {
        let grid = Arc::new(TimeGrid::new(step, tau)?);
        let cohorts = inputs
            .iter()
            .map(|input| load_cohort(input, &grid, opts.min_followup_days.unwrap_or(0.0)))
            .collect::<Result<Vec<Cohort>>>()?;
        let fully_observed = cohorts
            .iter()
            .all(|c| c.trajectories.iter().all(|t| t.is_fully_observed()));
        let boot = BootstrapOptions {
            b,
            seed,
            ..BootstrapOptions::default()
        };
        for m in expand_methods(method, fully_observed) {
            let block = compare_once(&cohorts, m, &ranges, &est_options, &boot, tau)
                .with_context(|| format!("{} comparison at tau = {tau} days", m.name()))?;
            for rc in &block.ranges {
                let mut row = vec![format!("{tau}"), rc.range.clone(), m.name().to_string()];
                for (e, s) in rc.estimates.iter().zip(&rc.ses) {
                    row.push(pct_pm(*e, *s));
                }
                row.push(pvalue(rc.p_value));
                table_rows.push(row);
            }
            comparisons.push(block);
        }
    }

    let document = CompareDocument {
        groups: labels.clone(),
        mode: format!("{}", est_options.model),
        bootstrap_b: b,
        seed,
        weight_floor: est_options.weight_floor,
        comparisons,
    };
    write_json(&out_dir.join("report.json"), &document)?;

    let mut header = vec!["tau_days".to_string(), "range".into(), "method".into()];
    header.extend(labels.iter().map(|l| format!("{l} (%)")));
    header.push("p_value".into());
    print!("{}", render_table(&header, &table_rows));
    Ok(())
}

fn compare_once(
    cohorts: &[Cohort],
    method: ConcreteMethod,
    ranges: &[tir_core::TargetRange],
    est_options: &EstimateOptions,
    boot: &BootstrapOptions,
    tau: f64,
) -> Result<ComparisonBlock> {
    let estimator = |c: &Cohort| method.estimate(c, ranges, est_options);
    let mut estimates: Vec<Vec<f64>> = Vec::new();
    let mut ses: Vec<Vec<f64>> = Vec::new();
    for cohort in cohorts {
        let result = bootstrap_estimates(cohort, boot, estimator)
            .with_context(|| format!("bootstrapping group `{}`", cohort.group_label))?;
        estimates.push(result.point);
        ses.push(result.se);
    }
    let refs: Vec<&Cohort> = cohorts.iter().collect();
    let tests = wald_tests(&refs, boot, estimator)?;
    let ranges_out = ranges
        .iter()
        .enumerate()
        .map(|(r, range)| RangeComparison {
            range: range.label(),
            estimates: estimates.iter().map(|e| e[r]).collect(),
            ses: ses.iter().map(|s| s[r]).collect(),
            contrast: tests[r].differences.clone(),
            covariance: tests[r].covariance.clone(),
            statistic: tests[r].statistic,
            df: tests[r].df,
            p_value: tests[r].p_value,
        })
        .collect();
    Ok(ComparisonBlock {
        tau_days: tau,
        method: method.name().into(),
        ranges: ranges_out,
    })
}
