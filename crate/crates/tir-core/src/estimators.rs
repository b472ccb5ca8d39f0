//! Time-in-range estimators: the per-subject oracle, the naive
//! available-readings average, and the inverse-weighted pooled estimator with
//! Cox or product-limit availability weights.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Result, TirError};
use crate::range::TargetRange;
use crate::survival::{
    fit_cox, survival_prob_all, survival_prob_km, CoxFit, CoxOptions, SurvivalCurve,
};
use crate::trajectory::{Cohort, Trajectory};

/// Availability-weight model for the pooled estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightModel {
    /// Proportional hazards on the observation history (informative follow-up).
    Cox,
    /// Covariate-free product-limit weights (non-informative follow-up).
    ProductLimit,
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightModel::Cox => write!(f, "cox"),
            WeightModel::ProductLimit => write!(f, "product-limit"),
        }
    }
}

/// Knobs for the full weighted pipeline.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub model: WeightModel,
    /// Lower clamp on estimated availability probabilities before inversion.
    pub weight_floor: f64,
    /// Accept a follow-up fit that stopped short of the score tolerance.
    pub allow_unconverged: bool,
    pub cox: CoxOptions,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            model: WeightModel::Cox,
            weight_floor: 0.01,
            allow_unconverged: false,
            cox: CoxOptions::default(),
        }
    }
}

/// Pointwise in-range probability estimate over the `K - 1` left endpoints of
/// the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgCurve {
    pub range: TargetRange,
    pub values: Vec<f64>,
}

/// A mean time-in-range point estimate for one target range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TirEstimate {
    pub range: TargetRange,
    pub mu_hat: f64,
}

/// Everything produced by one weighted-pipeline evaluation.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub estimates: Vec<TirEstimate>,
    pub curves: Vec<PgCurve>,
    pub cox_fit: Option<CoxFit>,
    /// Available points whose availability probability was clamped up to the
    /// floor before inversion.
    pub floor_activations: usize,
}

/// Fraction of left endpoints in range for one fully observed subject.
pub fn subject_tir_oracle(traj: &Trajectory, range: &TargetRange) -> Result<f64> {
    let k = traj.grid.integration_points();
    for j in 0..k {
        if !traj.availability[j] {
            return Err(TirError::IncompleteForOracle {
                subject: traj.subject_id.clone(),
                time_minutes: traj.grid.point(j),
            });
        }
    }
    let hits = (0..k).filter(|&j| range.contains(traj.glucose[j])).count();
    Ok(hits as f64 / k as f64)
}

/// Per-subject naive TIR: in-range fraction among the subject's available
/// left endpoints, ignoring why the rest are missing.
pub fn naive_subject_tirs(cohort: &Cohort, range: &TargetRange) -> Result<Vec<f64>> {
    let k = cohort.grid.integration_points();
    cohort
        .trajectories
        .iter()
        .map(|traj| {
            let mut hits = 0usize;
            let mut avail = 0usize;
            for j in 0..k {
                if traj.availability[j] {
                    avail += 1;
                    hits += range.contains(traj.glucose[j]) as usize;
                }
            }
            if avail == 0 {
                return Err(TirError::NoAvailableReadings(traj.subject_id.clone()));
            }
            Ok(hits as f64 / avail as f64)
        })
        .collect()
}

/// Naive cohort mean TIR: average of the per-subject naive fractions.
pub fn naive_mean_tir(cohort: &Cohort, range: &TargetRange) -> Result<f64> {
    let per_subject = naive_subject_tirs(cohort, range)?;
    Ok(per_subject.iter().sum::<f64>() / per_subject.len() as f64)
}

/// Inverse-weighted pooled in-range probability curves, one per range.
///
/// At each left endpoint the available subjects are weighted by the inverse of
/// their availability probability (clamped below at `floor`); a point where no
/// subject is available is a positivity failure. Returns the curves and the
/// number of floor activations.
pub fn estimate_pg_with_weights(
    cohort: &Cohort,
    ranges: &[TargetRange],
    weights: &[SurvivalCurve],
    floor: f64,
) -> Result<(Vec<PgCurve>, usize)> {
    if weights.len() != cohort.len() {
        return Err(TirError::Dimension(format!(
            "{} weight curves for {} subjects",
            weights.len(),
            cohort.len()
        )));
    }
    if !(0.0..1.0).contains(&floor) {
        return Err(TirError::Config(format!(
            "weight floor must lie in [0, 1), got {floor}"
        )));
    }
    let k = cohort.grid.integration_points();
    let mut values = vec![vec![0.0; k]; ranges.len()];
    let mut activations = 0usize;
    let mut nums = vec![0.0; ranges.len()];
    for j in 0..k {
        let mut denom = 0.0;
        nums.iter_mut().for_each(|v| *v = 0.0);
        for (traj, curve) in cohort.trajectories.iter().zip(weights) {
            if !traj.availability[j] {
                continue;
            }
            let mut p = curve.values[j];
            if p < floor {
                p = floor;
                activations += 1;
            }
            let inv = 1.0 / p;
            denom += inv;
            let y = traj.glucose[j];
            for (r, range) in ranges.iter().enumerate() {
                if range.contains(y) {
                    nums[r] += inv;
                }
            }
        }
        if denom == 0.0 {
            return Err(TirError::Positivity {
                time_minutes: cohort.grid.point(j),
            });
        }
        for r in 0..ranges.len() {
            values[r][j] = nums[r] / denom;
        }
    }
    let curves = ranges
        .iter()
        .zip(values)
        .map(|(&range, values)| PgCurve { range, values })
        .collect();
    Ok((curves, activations))
}

/// Unweighted pooled curves: every available reading counts once.
pub fn estimate_pg_simplified(
    cohort: &Cohort,
    ranges: &[TargetRange],
) -> Result<Vec<PgCurve>> {
    let unit = SurvivalCurve {
        subject_id: "<unit>".into(),
        values: vec![1.0; cohort.grid.len()],
    };
    let units: Vec<SurvivalCurve> = vec![unit; cohort.len()];
    estimate_pg_with_weights(cohort, ranges, &units, 0.0).map(|(curves, _)| curves)
}

/// Integrates a pointwise curve into the mean TIR over the horizon.
pub fn mean_tir_from_pg(curve: &PgCurve) -> f64 {
    curve.values.iter().sum::<f64>() / curve.values.len() as f64
}

/// The full weighted pipeline: fit the follow-up model, convert it to
/// per-subject availability probabilities, reweight the pooled curves, and
/// integrate.
pub fn proposed_pipeline(
    cohort: &Cohort,
    ranges: &[TargetRange],
    options: &EstimateOptions,
) -> Result<PipelineOutput> {
    let grid = &cohort.grid;
    let (weights, cox_fit) = match options.model {
        WeightModel::Cox => match fit_cox(cohort, &cohort.covariates, grid.tau_days(), &options.cox)
        {
            // no follow-up ended before tau: the cumulative hazard is
            // identically zero, so every availability probability is one
            Err(TirError::NoEvents) => {
                let unit = SurvivalCurve {
                    subject_id: "<unit>".into(),
                    values: vec![1.0; grid.len()],
                };
                (vec![unit; cohort.len()], None)
            }
            Err(e) => return Err(e.at_stage("follow-up model fit")),
            Ok(fit) => {
                if !fit.converged && !options.allow_unconverged {
                    return Err(TirError::CoxNotConverged {
                        iterations: fit.iterations,
                        score_norm: fit.final_score_norm,
                    }
                    .at_stage("follow-up model fit"));
                }
                let weights = survival_prob_all(&fit, &cohort.covariates, grid);
                (weights, Some(fit))
            }
        },
        WeightModel::ProductLimit => {
            let shared = survival_prob_km(cohort, grid)
                .map_err(|e| e.at_stage("follow-up model fit"))?;
            (vec![shared; cohort.len()], None)
        }
    };
    let (curves, floor_activations) =
        estimate_pg_with_weights(cohort, ranges, &weights, options.weight_floor)
            .map_err(|e| e.at_stage("reweighting"))?;
    let estimates = curves
        .iter()
        .map(|c| TirEstimate {
            range: c.range,
            mu_hat: mean_tir_from_pg(c),
        })
        .collect();
    Ok(PipelineOutput {
        estimates,
        curves,
        cox_fit,
        floor_activations,
    })
}
