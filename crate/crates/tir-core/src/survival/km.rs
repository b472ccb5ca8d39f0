use super::SurvivalCurve;
use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};
use crate::trajectory::Cohort;

/// Covariate-free product-limit estimate of `Pr(t <= C)`, shared by every
/// subject. Used when the caller asserts non-informative follow-up; follow-up
/// past `tau` counts as administrative censoring at `tau`.
pub fn survival_prob_km(cohort: &Cohort, grid: &TimeGrid) -> Result<SurvivalCurve> {
    let tau = grid.tau_days();
    let mut ends: Vec<(f64, bool)> = cohort
        .trajectories
        .iter()
        .map(|t| (t.followup_days.min(tau), t.followup_days <= tau))
        .collect();
    if !ends.iter().any(|&(_, e)| e) {
        // no events: the curve is identically one
        return Ok(SurvivalCurve {
            subject_id: "<km>".into(),
            values: vec![1.0; grid.len()],
        });
    }
    ends.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct event times with (d, n-at-risk)
    let n = ends.len();
    let mut steps: Vec<(f64, f64)> = Vec::new();
    let mut i = 0usize;
    while i < n {
        let t = ends[i].0;
        let at_risk = (n - i) as f64;
        let mut d = 0usize;
        let mut j = i;
        while j < n && ends[j].0 == t {
            if ends[j].1 {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            steps.push((t, 1.0 - d as f64 / at_risk));
        }
        i = j;
    }
    if steps.is_empty() {
        return Err(TirError::NoEvents);
    }

    let mut values = Vec::with_capacity(grid.len());
    let mut s = 1.0;
    let mut cursor = 0usize;
    for &t in grid.points() {
        while cursor < steps.len() && steps[cursor].0 * MINUTES_PER_DAY <= t {
            s *= steps[cursor].1;
            cursor += 1;
        }
        values.push(s);
    }
    Ok(SurvivalCurve {
        subject_id: "<km>".into(),
        values,
    })
}
