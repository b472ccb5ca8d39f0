//! `simulate`: write one synthetic multi-group dataset plus its ground truth.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tir_core::ingest::{canonical_readings, write_followups_csv, write_readings_csv};
use tir_core::sim::{generate_scenario, group_truth, GeneratedGroup, ScenarioConfig};
use tir_core::TimeGrid;

use crate::commands::estimate::write_json;
use crate::opts::CommonOpts;
use crate::ranges::parse_ranges;
use crate::scenario_file::load_scenario;

#[derive(Debug, Serialize)]
struct GroupTruth {
    label: String,
    n_subjects: usize,
    /// Mean TIR implied by the generative model, aligned with `ranges`.
    truth: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct GroundTruthDocument {
    seed: u64,
    step_minutes: f64,
    tau_days: f64,
    ranges: Vec<String>,
    groups: Vec<GroupTruth>,
}

/// Resolves the scenario: an explicit file, or the built-in informative
/// benchmark sized by `--n`.
pub fn resolve_scenario(opts: &CommonOpts) -> Result<(ScenarioConfig, Option<u64>)> {
    match &opts.scenario {
        Some(path) => load_scenario(path),
        None => Ok((
            ScenarioConfig::informative_benchmark(opts.n.unwrap_or(200)),
            None,
        )),
    }
}

pub fn run(opts: CommonOpts) -> Result<()> {
    let opts = opts.merged()?;
    let (scenario, file_seed) = resolve_scenario(&opts)?;
    let seed = opts.seed.or(file_seed).unwrap_or(0);
    let ranges = parse_ranges(opts.ranges.as_deref().unwrap_or("standard3"))?;
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let groups = generate_scenario(&scenario, seed)?;
    let grid = TimeGrid::new(scenario.step_minutes, scenario.tau_days)?;

    let mut truths = Vec::new();
    for (spec, group) in scenario.groups.iter().zip(&groups) {
        write_group_files(&out_dir, &spec.label, group)?;
        truths.push(GroupTruth {
            label: spec.label.clone(),
            n_subjects: spec.n_subjects,
            truth: ranges
                .iter()
                .map(|range| group_truth(spec, &scenario.kernel, &grid, range))
                .collect::<tir_core::Result<Vec<f64>>>()?,
        });
    }
    let document = GroundTruthDocument {
        seed,
        step_minutes: scenario.step_minutes,
        tau_days: scenario.tau_days,
        ranges: ranges.iter().map(|r| r.label()).collect(),
        groups: truths,
    };
    write_json(&out_dir.join("ground_truth.json"), &document)?;

    for spec in &scenario.groups {
        println!(
            "wrote group `{}` ({} subjects): {label}_readings.csv, {label}_followups.csv, \
             {label}_covariates.csv, {label}_complete_readings.csv, {label}_complete_followups.csv",
            spec.label,
            spec.n_subjects,
            label = spec.label
        );
    }
    println!("wrote ground_truth.json");
    Ok(())
}

/// Writes the analysis view (masked readings, follow-ups, static covariate)
/// and the fully observed ground-truth view for one group.
fn write_group_files(out_dir: &Path, label: &str, group: &GeneratedGroup) -> Result<()> {
    let open = |name: String| -> Result<BufWriter<File>> {
        let path = out_dir.join(name);
        Ok(BufWriter::new(File::create(&path).with_context(|| {
            format!("creating {}", path.display())
        })?))
    };

    write_readings_csv(
        &canonical_readings(&group.masked),
        open(format!("{label}_readings.csv"))?,
    )?;
    write_followups_csv(&group.masked, open(format!("{label}_followups.csv"))?)?;
    write_readings_csv(
        &canonical_readings(&group.complete),
        open(format!("{label}_complete_readings.csv"))?,
    )?;
    write_followups_csv(
        &group.complete,
        open(format!("{label}_complete_followups.csv"))?,
    )?;

    // the static second model covariate; the first (previous-day mean) is
    // reconstructed from the readings at analysis time
    let mut w = csv::Writer::from_writer(open(format!("{label}_covariates.csv"))?);
    w.write_record(["subject_id", "time_minutes", "z"])?;
    for cov in &group.masked.covariates {
        if cov.dim >= 2 {
            w.write_record([cov.subject_id.as_str(), "0", &format!("{}", cov.row(0)[1])])?;
        }
    }
    w.flush()?;
    Ok(())
}
