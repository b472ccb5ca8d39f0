use rand::Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};
use crate::trajectory::CovariateProcess;

/// Weibull-type baseline hazard `lambda_0(t) = scale * t^(-shape)` with time
/// in days and `0 <= shape < 1`, so the cumulative baseline
/// `scale * t^(1-shape) / (1 - shape)` is finite at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullBaseline {
    pub scale: f64,
    pub shape: f64,
}

impl WeibullBaseline {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(TirError::Config(format!(
                "baseline scale must be positive, got {}",
                self.scale
            )));
        }
        if !(0.0..1.0).contains(&self.shape) {
            return Err(TirError::Config(format!(
                "baseline shape must lie in [0, 1), got {}",
                self.shape
            )));
        }
        Ok(())
    }

    /// Cumulative baseline hazard at `t` days.
    #[inline]
    pub fn cumulative(&self, t_days: f64) -> f64 {
        self.scale * t_days.powf(1.0 - self.shape) / (1.0 - self.shape)
    }

    /// Inverse of [`Self::cumulative`].
    #[inline]
    fn invert(&self, cumulative: f64) -> f64 {
        ((1.0 - self.shape) * cumulative / self.scale).powf(1.0 / (1.0 - self.shape))
    }
}

/// Samples a follow-up duration from a proportional-hazards model with
/// piecewise-constant covariates on the grid.
///
/// The cumulative hazard is accumulated interval by interval and the event
/// time is solved exactly inside the interval where the unit-exponential draw
/// is exhausted, so the sample distribution is continuous rather than
/// grid-snapped. Subjects surviving the horizon get `tau` plus one grid step.
pub fn sample_followup_cox<R: Rng + ?Sized>(
    rng: &mut R,
    baseline: &WeibullBaseline,
    beta: &[f64],
    covariates: &CovariateProcess,
    grid: &TimeGrid,
) -> Result<f64> {
    baseline.validate()?;
    if beta.len() != covariates.dim {
        return Err(TirError::Dimension(format!(
            "{} hazard coefficients for {}-dimensional covariates",
            beta.len(),
            covariates.dim
        )));
    }
    let target: f64 = Exp1.sample(rng);
    let mut acc = 0.0;
    for j in 0..grid.integration_points() {
        let d0 = grid.point(j) / MINUTES_PER_DAY;
        let d1 = grid.point(j + 1) / MINUTES_PER_DAY;
        let z = covariates.row(j);
        let m = beta
            .iter()
            .zip(z)
            .map(|(b, v)| b * v)
            .sum::<f64>()
            .exp();
        let step = m * (baseline.cumulative(d1) - baseline.cumulative(d0));
        if acc + step >= target {
            let within = baseline.cumulative(d0) + (target - acc) / m;
            return Ok(baseline.invert(within));
        }
        acc += step;
    }
    Ok(grid.tau_days() + grid.step_minutes() / MINUTES_PER_DAY)
}

/// Non-informative follow-up mixture: 0.8 Unif(0, 2) + 0.2 Unif(2, 9) days.
pub fn sample_followup_noninformative<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.gen::<f64>() < 0.8 {
        Uniform::new(0.0f64, 2.0).sample(rng)
    } else {
        Uniform::new(2.0f64, 9.0).sample(rng)
    }
}

/// Transformation-model follow-up: `C = scale * exp(-zeta + eps)` with a
/// latent Bernoulli(1/2) flag `zeta` and `eps` drawn from a
/// logistic/extreme-value mixture. Returns `(c_days, zeta)`. Deliberately
/// violates proportional hazards, for sensitivity runs.
pub fn sample_followup_transformed<R: Rng + ?Sized>(
    rng: &mut R,
    scale: f64,
    mixture_p: f64,
) -> (f64, bool) {
    let zeta = rng.gen::<f64>() < 0.5;
    let u: f64 = rng.gen();
    let eps = if rng.gen::<f64>() < mixture_p {
        // standard logistic quantile
        (u / (1.0 - u)).ln()
    } else {
        // standard minimum extreme value quantile: F(x) = 1 - exp(-e^x)
        (-(1.0 - u).ln()).ln()
    };
    let c = scale * (-(zeta as u8 as f64) + eps).exp();
    (c, zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn constant_covariates(grid: &Arc<TimeGrid>, z: f64) -> CovariateProcess {
        CovariateProcess::from_columns("s", Arc::clone(grid), &[vec![z; grid.len()]]).unwrap()
    }

    #[test]
    fn cumulative_baseline_closed_forms() {
        let flat = WeibullBaseline {
            scale: 0.3,
            shape: 0.0,
        };
        assert!((flat.cumulative(2.0) - 0.6).abs() < 1e-14);
        let w = WeibullBaseline {
            scale: 0.5,
            shape: 0.5,
        };
        assert!((w.cumulative(4.0) - 0.5 * 2.0 / 0.5).abs() < 1e-12);
        assert!((w.invert(w.cumulative(3.3)) - 3.3).abs() < 1e-12);
    }

    #[test]
    fn constant_hazard_samples_pass_a_ks_check() {
        // with constant covariates the survival law is known in closed form:
        // S(t) = exp(-m * L0(t)); compare the conditional-on-event empirical
        // CDF over [0, tau] with the analytic one
        let grid = Arc::new(TimeGrid::new(60.0, 7.0).unwrap());
        let baseline = WeibullBaseline {
            scale: 0.5,
            shape: 0.5,
        };
        let beta = [0.3];
        let cov = constant_covariates(&grid, 1.0);
        let m = 0.3f64.exp();
        let tau = 7.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 50_000;
        let mut events: Vec<f64> = Vec::new();
        for _ in 0..n {
            let c = sample_followup_cox(&mut rng, &baseline, &beta, &cov, &grid).unwrap();
            if c <= tau {
                events.push(c);
            }
        }
        events.sort_by(f64::total_cmp);
        let f = |t: f64| 1.0 - (-m * baseline.cumulative(t)).exp();
        let f_tau = f(tau);
        let mut ks = 0.0f64;
        let ne = events.len() as f64;
        for (i, &t) in events.iter().enumerate() {
            let theo = f(t) / f_tau;
            let hi = (i + 1) as f64 / ne;
            let lo = i as f64 / ne;
            ks = ks.max((hi - theo).abs()).max((theo - lo).abs());
        }
        assert!(ks < 0.01, "KS statistic {ks}");
        // survivors get tau plus one step
        let survivor_rate = 1.0 - ne / n as f64;
        let expected = (-m * baseline.cumulative(tau)).exp();
        assert!((survivor_rate - expected).abs() < 0.01);
    }

    #[test]
    fn covariate_jump_shows_up_in_survival() {
        // z = 0 during day 1, z = 1 afterwards, flat baseline
        let grid = Arc::new(TimeGrid::new(360.0, 4.0).unwrap());
        let column: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| if t < MINUTES_PER_DAY { 0.0 } else { 1.0 })
            .collect();
        let cov = CovariateProcess::from_columns("s", Arc::clone(&grid), &[column]).unwrap();
        let baseline = WeibullBaseline {
            scale: 0.4,
            shape: 0.0,
        };
        let beta = [1.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let mut past_1 = 0usize;
        let mut past_2 = 0usize;
        for _ in 0..n {
            let c = sample_followup_cox(&mut rng, &baseline, &beta, &cov, &grid).unwrap();
            past_1 += (c > 1.0) as usize;
            past_2 += (c > 2.0) as usize;
        }
        // S(1) = exp(-0.4); S(2) = exp(-0.4 - 0.4 e)
        let s1 = (-0.4f64).exp();
        let s2 = (-0.4 - 0.4 * 1.0f64.exp()).exp();
        assert!((past_1 as f64 / n as f64 - s1).abs() < 0.01);
        assert!((past_2 as f64 / n as f64 - s2).abs() < 0.01);
    }

    #[test]
    fn positive_coefficient_shortens_followup() {
        let grid = Arc::new(TimeGrid::new(360.0, 7.0).unwrap());
        let baseline = WeibullBaseline {
            scale: 0.2,
            shape: 0.0,
        };
        let lo_cov = constant_covariates(&grid, 0.0);
        let hi_cov = constant_covariates(&grid, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mean = |cov: &CovariateProcess, rng: &mut ChaCha8Rng| {
            (0..3000)
                .map(|_| sample_followup_cox(rng, &baseline, &[1.0], cov, &grid).unwrap())
                .sum::<f64>()
                / 3000.0
        };
        let lo = mean(&lo_cov, &mut rng);
        let hi = mean(&hi_cov, &mut rng);
        assert!(hi < lo, "hi {hi} vs lo {lo}");
    }

    #[test]
    fn noninformative_mixture_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 50_000;
        let mut sum = 0.0;
        let mut below_2 = 0usize;
        for _ in 0..n {
            let c = sample_followup_noninformative(&mut rng);
            assert!((0.0..9.0).contains(&c));
            sum += c;
            below_2 += (c < 2.0) as usize;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.9).abs() < 0.05, "mean {mean}");
        assert!((below_2 as f64 / n as f64 - 0.8).abs() < 0.01);
    }

    #[test]
    fn transformed_followup_flag_and_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 40_000;
        let mut zeta_count = 0usize;
        let mut log_sum = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for _ in 0..n {
            let (c, zeta) = sample_followup_transformed(&mut rng, 8.0, 0.5);
            assert!(c > 0.0);
            zeta_count += zeta as usize;
            let idx = zeta as usize;
            log_sum[idx] += c.ln();
            counts[idx] += 1;
        }
        assert!((zeta_count as f64 / n as f64 - 0.5).abs() < 0.01);
        // log C differs by exactly 1 in expectation between the flag groups
        let gap = log_sum[0] / counts[0] as f64 - log_sum[1] / counts[1] as f64;
        assert!((gap - 1.0).abs() < 0.05, "gap {gap}");
    }
}
