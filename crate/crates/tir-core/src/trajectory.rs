use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};

/// One subject's piecewise-constant glucose path on the canonical grid.
///
/// `glucose[j]` is only meaningful where `availability[j]` is true; masked
/// entries hold NaN. `availability[j] = intermittent[j] && t_j <= C` holds by
/// construction and is re-checked on assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub subject_id: String,
    pub grid: Arc<TimeGrid>,
    pub glucose: Vec<f64>,
    pub availability: Vec<bool>,
    pub intermittent: Vec<bool>,
    pub followup_days: f64,
}

impl Trajectory {
    pub fn new(
        subject_id: impl Into<String>,
        grid: Arc<TimeGrid>,
        glucose: Vec<f64>,
        intermittent: Vec<bool>,
        followup_days: f64,
    ) -> Result<Trajectory> {
        let subject_id = subject_id.into();
        let k = grid.len();
        if glucose.len() != k || intermittent.len() != k {
            return Err(TirError::Dimension(format!(
                "subject `{subject_id}`: expected {k} grid values, got {} glucose / {} mask",
                glucose.len(),
                intermittent.len()
            )));
        }
        if !(followup_days > 0.0) {
            return Err(TirError::FollowupTooShort {
                subject: subject_id,
                followup_days,
            });
        }
        let followup_minutes = followup_days * MINUTES_PER_DAY;
        let availability: Vec<bool> = grid
            .points()
            .iter()
            .zip(&intermittent)
            .map(|(&t, &m)| m && t <= followup_minutes)
            .collect();
        for (j, (&avail, &g)) in availability.iter().zip(&glucose).enumerate() {
            if avail && !g.is_finite() {
                return Err(TirError::Ingest(format!(
                    "subject `{subject_id}`: available point t = {} min has undefined glucose",
                    grid.point(j)
                )));
            }
        }
        Ok(Trajectory {
            subject_id,
            grid,
            glucose,
            availability,
            intermittent,
            followup_days,
        })
    }

    /// Fully observed path over the whole horizon.
    pub fn complete(
        subject_id: impl Into<String>,
        grid: Arc<TimeGrid>,
        glucose: Vec<f64>,
    ) -> Result<Trajectory> {
        let mask = vec![true; grid.len()];
        let tau = grid.tau_days();
        Trajectory::new(subject_id, grid, glucose, mask, tau)
    }

    pub fn is_fully_observed(&self) -> bool {
        self.availability.iter().all(|&a| a)
    }

    pub fn n_available(&self) -> usize {
        self.availability.iter().filter(|&&a| a).count()
    }

    pub fn followup_minutes(&self) -> f64 {
        self.followup_days * MINUTES_PER_DAY
    }

    /// Average available glucose over the day preceding grid point `idx`,
    /// divided by 100. Zero over the first day; carries the last defined
    /// value forward through windows with no available reading.
    pub fn prev_day_mean_path(&self) -> Vec<f64> {
        prev_day_mean_path(self)
    }
}

/// Normalized previous-day-mean history covariate along the whole grid.
///
/// At grid times during the first day the covariate is 0. Afterwards it is
/// the mean of the available glucose over `[t - 1440, t)` divided by 100;
/// when a window holds no available reading the most recent defined value is
/// carried forward (0 if none exists yet).
pub fn prev_day_mean_path(traj: &Trajectory) -> Vec<f64> {
    let grid = &traj.grid;
    let k = grid.len();
    let step = grid.step_minutes();
    let window = (MINUTES_PER_DAY / step).round() as usize;
    let mut out = vec![0.0; k];
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut last_defined = 0.0;
    for j in 0..k {
        if j >= window {
            if j > window {
                // drop the left endpoint that fell out of [t-1440, t)
                let drop = j - window - 1;
                if traj.availability[drop] {
                    sum -= traj.glucose[drop];
                    count -= 1;
                }
            }
            if count > 0 {
                last_defined = sum / count as f64 / 100.0;
            }
            out[j] = last_defined;
        }
        // points strictly before t_{j+1} enter the next window
        if traj.availability[j] {
            sum += traj.glucose[j];
            count += 1;
        }
    }
    out
}

/// Single-point view of the previous-day-mean covariate. `t_minutes` must be
/// a grid point.
pub fn history_covariate_prev_day_mean(traj: &Trajectory, t_minutes: f64) -> f64 {
    let step = traj.grid.step_minutes();
    let idx = (t_minutes / step).round() as usize;
    debug_assert!((traj.grid.point(idx) - t_minutes).abs() < 1e-9);
    traj.prev_day_mean_path()[idx]
}

/// Time-varying covariate rows aligned to the grid, stored row-major as
/// `values[j * dim + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateProcess {
    pub subject_id: String,
    pub grid: Arc<TimeGrid>,
    pub dim: usize,
    values: Vec<f64>,
}

impl CovariateProcess {
    pub fn new(
        subject_id: impl Into<String>,
        grid: Arc<TimeGrid>,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<CovariateProcess> {
        let subject_id = subject_id.into();
        if dim == 0 {
            return Err(TirError::Dimension(format!(
                "subject `{subject_id}`: covariate dimension must be >= 1"
            )));
        }
        if values.len() != grid.len() * dim {
            return Err(TirError::Dimension(format!(
                "subject `{subject_id}`: expected {} covariate values, got {}",
                grid.len() * dim,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(TirError::Dimension(format!(
                "subject `{subject_id}`: non-finite covariate entry at flat index {bad}"
            )));
        }
        Ok(CovariateProcess {
            subject_id,
            grid,
            dim,
            values,
        })
    }

    /// Builds covariates from per-column grid paths.
    pub fn from_columns(
        subject_id: impl Into<String>,
        grid: Arc<TimeGrid>,
        columns: &[Vec<f64>],
    ) -> Result<CovariateProcess> {
        let dim = columns.len();
        let k = grid.len();
        let mut values = Vec::with_capacity(k * dim);
        for j in 0..k {
            for col in columns {
                values.push(col[j]);
            }
        }
        CovariateProcess::new(subject_id, grid, dim, values)
    }

    #[inline]
    pub fn row(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Covariate row governing the left limit at time `t` (minutes).
    #[inline]
    pub fn row_left_of(&self, t_minutes: f64) -> &[f64] {
        self.row(self.grid.left_limit_index(t_minutes))
    }

    /// Returns a copy with one column rescaled; used by the scale-invariance
    /// checks.
    pub fn with_scaled_column(&self, column: usize, factor: f64) -> CovariateProcess {
        let mut values = self.values.clone();
        for j in 0..self.grid.len() {
            values[j * self.dim + column] *= factor;
        }
        CovariateProcess {
            subject_id: self.subject_id.clone(),
            grid: Arc::clone(&self.grid),
            dim: self.dim,
            values,
        }
    }
}

/// Trajectories plus aligned covariate processes sharing one grid.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub grid: Arc<TimeGrid>,
    pub trajectories: Vec<Trajectory>,
    pub covariates: Vec<CovariateProcess>,
    pub group_label: String,
}

impl Cohort {
    pub fn new(
        grid: Arc<TimeGrid>,
        trajectories: Vec<Trajectory>,
        covariates: Vec<CovariateProcess>,
        group_label: impl Into<String>,
    ) -> Result<Cohort> {
        if trajectories.is_empty() {
            return Err(TirError::Ingest("cohort has no subjects".into()));
        }
        if trajectories.len() != covariates.len() {
            return Err(TirError::Dimension(format!(
                "{} trajectories vs {} covariate processes",
                trajectories.len(),
                covariates.len()
            )));
        }
        let mut seen = HashSet::new();
        for (traj, cov) in trajectories.iter().zip(&covariates) {
            if traj.grid != grid || cov.grid != grid {
                return Err(TirError::Dimension(format!(
                    "subject `{}` is not aligned to the cohort grid",
                    traj.subject_id
                )));
            }
            if traj.subject_id != cov.subject_id {
                return Err(TirError::Dimension(format!(
                    "trajectory `{}` paired with covariates `{}`",
                    traj.subject_id, cov.subject_id
                )));
            }
            if !seen.insert(traj.subject_id.clone()) {
                return Err(TirError::Ingest(format!(
                    "duplicate subject id `{}`",
                    traj.subject_id
                )));
            }
        }
        let dim = covariates[0].dim;
        if covariates.iter().any(|c| c.dim != dim) {
            return Err(TirError::Dimension(
                "covariate dimension differs across subjects".into(),
            ));
        }
        Ok(Cohort {
            grid,
            trajectories,
            covariates,
            group_label: group_label.into(),
        })
    }

    /// Builds the default model covariates for every subject: the normalized
    /// previous-day glucose mean, optionally followed by static extras.
    pub fn default_covariates(&self) -> Vec<CovariateProcess> {
        self.trajectories
            .iter()
            .map(|t| {
                CovariateProcess::from_columns(
                    t.subject_id.clone(),
                    Arc::clone(&self.grid),
                    &[t.prev_day_mean_path()],
                )
                .expect("prev-day path has grid length")
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Subject-level resample (trajectory and covariates move together).
    pub fn resample(&self, indices: &[usize]) -> Cohort {
        let trajectories = indices
            .iter()
            .enumerate()
            .map(|(new_idx, &i)| {
                let mut t = self.trajectories[i].clone();
                // keep ids unique in the resampled cohort
                t.subject_id = format!("{}#{new_idx}", t.subject_id);
                t
            })
            .collect();
        let covariates = indices
            .iter()
            .enumerate()
            .map(|(new_idx, &i)| {
                let mut c = self.covariates[i].clone();
                c.subject_id = format!("{}#{new_idx}", c.subject_id);
                c
            })
            .collect();
        Cohort {
            grid: Arc::clone(&self.grid),
            trajectories,
            covariates,
            group_label: self.group_label.clone(),
        }
    }
}
