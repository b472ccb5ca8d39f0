//! Loading cohorts from readings / follow-up / covariate CSV files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use tir_core::ingest::{ingest_readings, read_covariates_csv, read_followups_csv, read_readings_csv};
use tir_core::{Cohort, CovariateProcess, TimeGrid};

/// One group's input files.
#[derive(Debug, Clone)]
pub struct GroupInput {
    pub label: String,
    pub readings: PathBuf,
    pub followups: PathBuf,
    pub covariates: Option<PathBuf>,
}

/// Parses a `--group` value: `LABEL=READINGS,FOLLOWUPS[,COVARIATES]`.
pub fn parse_group_spec(spec: &str) -> Result<GroupInput> {
    let (label, files) = spec
        .split_once('=')
        .with_context(|| format!("group spec `{spec}` must look like LABEL=READINGS,FOLLOWUPS"))?;
    let parts: Vec<&str> = files.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("group spec `{spec}` must list a readings file and a follow-up file");
    }
    if label.trim().is_empty() {
        bail!("group spec `{spec}` has an empty label");
    }
    Ok(GroupInput {
        label: label.trim().to_string(),
        readings: PathBuf::from(parts[0]),
        followups: PathBuf::from(parts[1]),
        covariates: parts.get(2).map(PathBuf::from),
    })
}

/// Reads and ingests one cohort onto the grid. Row- and subject-level
/// rejections are reported on stderr but do not fail the run.
pub fn load_cohort(
    input: &GroupInput,
    grid: &Arc<TimeGrid>,
    min_followup_days: f64,
) -> Result<Cohort> {
    let rows = read_readings_csv(&input.readings)
        .with_context(|| format!("reading {}", input.readings.display()))?;
    let followups = read_followups_csv(&input.followups)
        .with_context(|| format!("reading {}", input.followups.display()))?;
    let report = ingest_readings(
        &rows,
        Arc::clone(grid),
        &followups,
        min_followup_days,
        &input.label,
    )
    .with_context(|| format!("ingesting group `{}`", input.label))?;
    if !report.rejected.is_empty() {
        eprintln!(
            "group `{}`: {} row(s)/subject(s) rejected during ingestion: {:?}",
            input.label,
            report.rejected.len(),
            &report.rejected[..report.rejected.len().min(5)]
        );
    }
    let cohort = report.cohort;
    match &input.covariates {
        None => Ok(cohort),
        Some(path) => attach_covariates(cohort, path, grid),
    }
}

/// Appends external covariate columns to the default previous-day-mean
/// column for every subject.
fn attach_covariates(cohort: Cohort, path: &Path, grid: &Arc<TimeGrid>) -> Result<Cohort> {
    let external = read_covariates_csv(path, grid)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut covariates = Vec::with_capacity(cohort.len());
    for traj in &cohort.trajectories {
        let ext = external.get(&traj.subject_id).with_context(|| {
            format!(
                "{} has no covariate rows for subject `{}`",
                path.display(),
                traj.subject_id
            )
        })?;
        let mut columns: Vec<Vec<f64>> = vec![traj.prev_day_mean_path()];
        for c in 0..ext.dim {
            columns.push((0..grid.len()).map(|j| ext.row(j)[c]).collect());
        }
        covariates.push(CovariateProcess::from_columns(
            traj.subject_id.clone(),
            Arc::clone(grid),
            &columns,
        )?);
    }
    let label = cohort.group_label.clone();
    Ok(Cohort::new(
        Arc::clone(grid),
        cohort.trajectories,
        covariates,
        label,
    )?)
}
