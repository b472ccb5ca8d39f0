use rand::Rng;
use rand_distr::{Distribution, Exp, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};
use crate::grid::TimeGrid;

/// Intermittent sensor-gap process: gap onsets follow an exponential clock
/// started at the end of the previous gap, gap lengths are uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapModel {
    /// Mean waiting time (minutes) from the end of one gap to the start of
    /// the next.
    pub mean_wait_minutes: f64,
    pub min_length_minutes: f64,
    pub max_length_minutes: f64,
}

impl Default for GapModel {
    fn default() -> Self {
        GapModel {
            mean_wait_minutes: 3424.0,
            min_length_minutes: 10.0,
            max_length_minutes: 70.0,
        }
    }
}

impl GapModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_wait_minutes > 0.0 && self.mean_wait_minutes.is_finite()) {
            return Err(TirError::Config(format!(
                "gap waiting time must be positive, got {}",
                self.mean_wait_minutes
            )));
        }
        if !(self.min_length_minutes >= 0.0
            && self.min_length_minutes < self.max_length_minutes
            && self.max_length_minutes.is_finite())
        {
            return Err(TirError::Config(format!(
                "gap length bounds ({}, {}) are invalid",
                self.min_length_minutes, self.max_length_minutes
            )));
        }
        Ok(())
    }
}

/// Samples the gap intervals `[start, end)` over the horizon.
pub fn sample_gaps<R: Rng + ?Sized>(
    rng: &mut R,
    model: &GapModel,
    horizon_minutes: f64,
) -> Vec<(f64, f64)> {
    let wait = Exp::new(1.0 / model.mean_wait_minutes).expect("validated rate");
    let length = Uniform::new(model.min_length_minutes, model.max_length_minutes);
    let mut gaps = Vec::new();
    let mut cursor = 0.0;
    loop {
        let start = cursor + wait.sample(rng);
        if start >= horizon_minutes {
            return gaps;
        }
        let end = start + length.sample(rng);
        gaps.push((start, end.min(horizon_minutes)));
        cursor = end;
    }
}

/// Observation mask on the grid: a point is unobserved exactly when it falls
/// inside a gap `[start, end)`.
pub fn inject_intermittent<R: Rng + ?Sized>(
    rng: &mut R,
    grid: &TimeGrid,
    model: &GapModel,
) -> Result<Vec<bool>> {
    model.validate()?;
    let gaps = sample_gaps(rng, model, grid.horizon_minutes());
    Ok(mask_from_gaps(grid, &gaps))
}

/// Deterministic core used by the sampler and the tests.
pub(crate) fn mask_from_gaps(grid: &TimeGrid, gaps: &[(f64, f64)]) -> Vec<bool> {
    let mut mask = vec![true; grid.len()];
    for &(start, end) in gaps {
        for (j, &t) in grid.points().iter().enumerate() {
            if t >= start && t < end {
                mask[j] = false;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_gap_masks_exactly_the_covered_points() {
        let grid = TimeGrid::five_minute(1.0).unwrap();
        let mask = mask_from_gaps(&grid, &[(100.0, 130.0)]);
        // points 100, 105, ..., 125 fall inside [100, 130)
        for (j, &t) in grid.points().iter().enumerate() {
            let expected = !(100.0..130.0).contains(&t);
            assert_eq!(mask[j], expected, "t = {t}");
        }
        assert_eq!(mask.iter().filter(|&&m| !m).count(), 6);
    }

    #[test]
    fn gaps_do_not_overlap_and_stay_in_horizon() {
        let grid = TimeGrid::five_minute(7.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = GapModel {
            mean_wait_minutes: 300.0,
            ..GapModel::default()
        };
        let gaps = sample_gaps(&mut rng, &model, grid.horizon_minutes());
        assert!(!gaps.is_empty());
        let mut prev_end = 0.0;
        for &(s, e) in &gaps {
            assert!(s >= prev_end);
            assert!(e > s);
            assert!(e <= grid.horizon_minutes());
            assert!(e - s <= 70.0 + 1e-9);
            prev_end = e;
        }
    }

    #[test]
    fn long_run_masking_rate_matches_renewal_fraction() {
        // expected unavailable fraction ~ E(len) / (E(wait) + E(len))
        let grid = TimeGrid::five_minute(7.0).unwrap();
        let model = GapModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut masked = 0usize;
        let mut total = 0usize;
        for _ in 0..400 {
            let mask = inject_intermittent(&mut rng, &grid, &model).unwrap();
            masked += mask.iter().filter(|&&m| !m).count();
            total += mask.len();
        }
        let rate = masked as f64 / total as f64;
        let expected = 40.0 / (3424.0 + 40.0);
        assert!(
            (rate - expected).abs() < 0.25 * expected,
            "rate {rate} vs {expected}"
        );
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(GapModel {
            mean_wait_minutes: 0.0,
            ..GapModel::default()
        }
        .validate()
        .is_err());
        assert!(GapModel {
            min_length_minutes: 70.0,
            max_length_minutes: 10.0,
            ..GapModel::default()
        }
        .validate()
        .is_err());
    }
}
