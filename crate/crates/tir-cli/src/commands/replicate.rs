//! `replicate`: the Monte Carlo replication harness over a scenario.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tir_core::estimators::EstimateOptions;
use tir_core::montecarlo::{run_monte_carlo, MonteCarloConfig, MonteCarloReport};

use crate::commands::simulate::resolve_scenario;
use crate::opts::{CommonOpts, ModeArg};
use crate::ranges::parse_ranges;
use crate::report::{pct, render_table};

pub fn run(opts: CommonOpts) -> Result<()> {
    let opts = opts.merged()?;
    let (scenario, file_seed) = resolve_scenario(&opts)?;
    let ranges = parse_ranges(opts.ranges.as_deref().unwrap_or("standard3"))?;
    let mode = opts.mode.unwrap_or(ModeArg::Cox);
    let est_options = EstimateOptions {
        model: mode.into(),
        weight_floor: opts.weight_floor.unwrap_or(0.01),
        ..EstimateOptions::default()
    };
    let cfg = MonteCarloConfig {
        scenario,
        reps: opts.reps.unwrap_or(200),
        bootstrap_b: opts.bootstrap_b.unwrap_or(200),
        seed: opts.seed.or(file_seed).unwrap_or(0),
        alpha: opts.alpha.unwrap_or(0.05),
    };
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let report = run_monte_carlo(&cfg, &ranges, &est_options)
        .context("replication study failed")?;

    write_summaries_csv(&out_dir.join("montecarlo.csv"), &report)?;
    write_tests_csv(&out_dir.join("montecarlo_tests.csv"), &report)?;

    println!(
        "completed {} of {} repetitions ({} failed)",
        report.reps_completed, cfg.reps, report.reps_failed
    );
    print!("{}", summary_table(&report));
    print!("{}", tests_table(&report));
    Ok(())
}

fn write_summaries_csv(path: &Path, report: &MonteCarloReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "group",
        "method",
        "range",
        "truth",
        "avg_estimate",
        "rel_bias_vs_truth",
        "rel_bias_vs_oracle",
        "esd",
        "avg_bse",
        "coverage_normal",
    ])?;
    for s in &report.summaries {
        w.write_record([
            s.group.as_str(),
            &format!("{}", s.method),
            s.range.as_str(),
            &format!("{}", s.truth),
            &format!("{}", s.avg_estimate),
            &format!("{}", s.rel_bias_vs_truth),
            &format!("{}", s.rel_bias_vs_oracle),
            &format!("{}", s.esd),
            &format!("{}", s.avg_bse),
            &format!("{}", s.coverage_normal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_tests_csv(path: &Path, report: &MonteCarloReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "group_a",
        "group_b",
        "method",
        "range",
        "rejection_rate",
        "reps",
    ])?;
    for t in &report.tests {
        w.write_record([
            t.group_a.as_str(),
            t.group_b.as_str(),
            &format!("{}", t.method),
            t.range.as_str(),
            &format!("{}", t.rejection_rate),
            &format!("{}", t.reps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn summary_table(report: &MonteCarloReport) -> String {
    let header: Vec<String> = [
        "group",
        "method",
        "range",
        "AvgEst (%)",
        "RelBias (%)",
        "ESD (x100)",
        "BSE (x100)",
        "Coverage (%)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.group.clone(),
                format!("{}", s.method),
                s.range.clone(),
                pct(s.avg_estimate),
                format!("{:.1}", 100.0 * s.rel_bias_vs_oracle.abs()),
                format!("{:.2}", 100.0 * s.esd),
                format!("{:.2}", 100.0 * s.avg_bse),
                pct(s.coverage_normal),
            ]
        })
        .collect();
    render_table(&header, &rows)
}

fn tests_table(report: &MonteCarloReport) -> String {
    let header: Vec<String> = ["comparison", "method", "range", "rejection rate (%)"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .tests
        .iter()
        .map(|t| {
            vec![
                format!("{} vs {}", t.group_a, t.group_b),
                format!("{}", t.method),
                t.range.clone(),
                pct(t.rejection_rate),
            ]
        })
        .collect();
    render_table(&header, &rows)
}
