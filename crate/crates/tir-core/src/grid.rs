use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};

pub const MINUTES_PER_DAY: f64 = 1440.0;

/// Canonical equally spaced reading grid over the analysis horizon `[0, tau]`.
///
/// Grid points are stored in minutes; the first point is 0 and the last point
/// equals `tau_days * 1440`. All trajectories, covariate processes and
/// estimated curves are aligned to one shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step_minutes: f64,
    tau_days: f64,
    points: Vec<f64>,
}

impl TimeGrid {
    /// Builds a grid with the given step (minutes) and horizon (days). The
    /// step must divide the horizon so that the last grid point lands exactly
    /// on `tau`.
    pub fn new(step_minutes: f64, tau_days: f64) -> Result<TimeGrid> {
        if !(step_minutes > 0.0) || !step_minutes.is_finite() {
            return Err(TirError::Grid(format!(
                "step must be a positive number of minutes, got {step_minutes}"
            )));
        }
        if !(tau_days > 0.0) || !tau_days.is_finite() {
            return Err(TirError::Grid(format!(
                "horizon must be a positive number of days, got {tau_days}"
            )));
        }
        let horizon_minutes = tau_days * MINUTES_PER_DAY;
        let steps = horizon_minutes / step_minutes;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(TirError::Grid(format!(
                "step {step_minutes} min does not divide the horizon {horizon_minutes} min"
            )));
        }
        let steps = steps.round() as usize;
        if steps == 0 {
            return Err(TirError::Grid(
                "horizon must span at least one grid step".into(),
            ));
        }
        let points = (0..=steps).map(|j| j as f64 * step_minutes).collect();
        Ok(TimeGrid {
            step_minutes,
            tau_days,
            points,
        })
    }

    /// Default 5-minute sampling grid.
    pub fn five_minute(tau_days: f64) -> Result<TimeGrid> {
        TimeGrid::new(5.0, tau_days)
    }

    pub fn step_minutes(&self) -> f64 {
        self.step_minutes
    }

    pub fn tau_days(&self) -> f64 {
        self.tau_days
    }

    pub fn horizon_minutes(&self) -> f64 {
        self.tau_days * MINUTES_PER_DAY
    }

    /// Number of grid points K (the last point sits at `tau`).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points in minutes.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> f64 {
        self.points[idx]
    }

    /// Index of the left-closed interval `[t_j, t_{j+1})` containing `t`
    /// (minutes). Returns `None` for t outside `[0, tau]`. `t == tau` maps to
    /// the last interval.
    pub fn interval_index(&self, t_minutes: f64) -> Option<usize> {
        if t_minutes < 0.0 || t_minutes > self.horizon_minutes() {
            return None;
        }
        let idx = (t_minutes / self.step_minutes).floor() as usize;
        Some(idx.min(self.points.len() - 2))
    }

    /// Index of the interval whose value governs the left limit at `t`
    /// (minutes): the interval containing `t - 0`. Used when risk-set
    /// covariates must be predictable at an event time.
    pub fn left_limit_index(&self, t_minutes: f64) -> usize {
        if t_minutes <= 0.0 {
            return 0;
        }
        let idx = ((t_minutes - 1e-9) / self.step_minutes).floor() as usize;
        idx.min(self.points.len() - 2)
    }

    /// Number of left endpoints used by step-function integrals over `[0, tau]`.
    pub fn integration_points(&self) -> usize {
        self.points.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_day_five_minute_grid_shape() {
        let g = TimeGrid::five_minute(7.0).unwrap();
        assert_eq!(g.len(), 2017);
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(2016), 7.0 * MINUTES_PER_DAY);
        let step = g.point(1) - g.point(0);
        assert_eq!(step, 5.0);
    }

    #[test]
    fn non_dividing_step_rejected() {
        assert!(TimeGrid::new(7.0, 1.0).is_err());
        assert!(TimeGrid::new(0.0, 1.0).is_err());
        assert!(TimeGrid::new(5.0, -1.0).is_err());
    }

    #[test]
    fn interval_snapping() {
        let g = TimeGrid::five_minute(7.0).unwrap();
        assert_eq!(g.interval_index(7.2), Some(1));
        assert_eq!(g.interval_index(0.0), Some(0));
        assert_eq!(g.interval_index(5.0), Some(1));
        assert_eq!(g.interval_index(-0.1), None);
        assert_eq!(g.interval_index(g.horizon_minutes()), Some(2015));
    }

    #[test]
    fn left_limit_index_at_grid_point() {
        let g = TimeGrid::five_minute(1.0).unwrap();
        // left limit at t=10 lives on [5, 10)
        assert_eq!(g.left_limit_index(10.0), 1);
        assert_eq!(g.left_limit_index(12.0), 2);
        assert_eq!(g.left_limit_index(0.0), 0);
    }
}
