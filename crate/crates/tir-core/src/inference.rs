//! Bootstrap standard errors, confidence intervals, and Wald group
//! comparisons built on subject-level resampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};
use crate::exec::map_indexed;
use crate::special::chi_square_upper_tail;
use crate::trajectory::Cohort;

const Z_975: f64 = 1.959963984540054;

/// Resampling controls shared by the interval and test routines.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapOptions {
    /// Number of resamples.
    pub b: usize,
    pub seed: u64,
    /// Resamples on which the estimator fails are dropped; more than this
    /// fraction failing is a hard error.
    pub max_failure_fraction: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            b: 200,
            seed: 0,
            max_failure_fraction: 0.1,
        }
    }
}

/// Bootstrap distribution summary for a vector-valued estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: Vec<f64>,
    /// Successful replicate values, outer index = replicate.
    pub replicates: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub ci_percentile: Vec<(f64, f64)>,
    pub ci_normal: Vec<(f64, f64)>,
    pub failures: usize,
}

/// One group-comparison Wald test on a scalar functional.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldTest {
    /// Differences against the last group, one per non-reference group.
    pub differences: Vec<f64>,
    /// Bootstrap covariance of the difference vector, row-major.
    pub covariance: Vec<f64>,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Deterministic replicate stream: one independent ChaCha stream per
/// `(seed, context, replicate)` triple. Shared with the simulator so cohorts
/// and resamples never collide.
pub(crate) fn replicate_rng(seed: u64, context: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ context.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(replicate);
    rng
}

/// Stable 64-bit label hash (FNV-1a) used to give each group its own stream
/// family regardless of argument order.
pub(crate) fn label_context(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn resample_indices(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn raw_replicates<F>(
    cohort: &Cohort,
    options: &BootstrapOptions,
    context: u64,
    estimator: &F,
) -> Vec<Result<Vec<f64>>>
where
    F: Fn(&Cohort) -> Result<Vec<f64>> + Sync,
{
    let n = cohort.len();
    map_indexed(options.b, |r| {
        let mut rng = replicate_rng(options.seed, context, r as u64);
        let indices = resample_indices(&mut rng, n);
        estimator(&cohort.resample(&indices))
    })
}

fn check_failures(failed: usize, options: &BootstrapOptions) -> Result<()> {
    if failed as f64 > options.max_failure_fraction * options.b as f64 {
        return Err(TirError::BootstrapFailures {
            failed,
            total: options.b,
        });
    }
    Ok(())
}

fn sample_sd(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
}

/// Linear-interpolation empirical quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let pos = q * (m - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Subject-level bootstrap of a vector-valued estimator.
///
/// Replicate `r` redraws `n` subjects with replacement from its own RNG
/// stream, so results are reproducible and independent of evaluation order.
pub fn bootstrap_estimates<F>(
    cohort: &Cohort,
    options: &BootstrapOptions,
    estimator: F,
) -> Result<BootstrapResult>
where
    F: Fn(&Cohort) -> Result<Vec<f64>> + Sync,
{
    if options.b < 2 {
        return Err(TirError::Config(format!(
            "bootstrap needs at least 2 resamples, got {}",
            options.b
        )));
    }
    let point = estimator(cohort)?;
    let dim = point.len();
    let context = label_context(&cohort.group_label);
    let raw = raw_replicates(cohort, options, context, &estimator);
    let failures = raw.iter().filter(|r| r.is_err()).count();
    check_failures(failures, options)?;
    let replicates: Vec<Vec<f64>> = raw.into_iter().filter_map(|r| r.ok()).collect();
    if replicates.len() < 2 {
        return Err(TirError::BootstrapFailures {
            failed: failures,
            total: options.b,
        });
    }

    let mut se = Vec::with_capacity(dim);
    let mut ci_percentile = Vec::with_capacity(dim);
    let mut ci_normal = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut column: Vec<f64> = replicates.iter().map(|r| r[c]).collect();
        se.push(sample_sd(&column));
        column.sort_by(f64::total_cmp);
        ci_percentile.push((
            quantile_sorted(&column, 0.025),
            quantile_sorted(&column, 0.975),
        ));
        ci_normal.push((point[c] - Z_975 * se[c], point[c] + Z_975 * se[c]));
    }
    Ok(BootstrapResult {
        point,
        replicates,
        se,
        ci_percentile,
        ci_normal,
        failures,
    })
}

/// Wald chi-square comparison of a vector-valued functional across groups.
///
/// Each cohort is bootstrapped on its own stream family (keyed by group
/// label, so argument order is irrelevant); replicate `r` of each group is
/// combined into a difference vector against the last group, and the test
/// inverts the bootstrap covariance of those differences. One test is
/// returned per component of the functional.
pub fn wald_tests<F>(
    cohorts: &[&Cohort],
    options: &BootstrapOptions,
    estimator: F,
) -> Result<Vec<WaldTest>>
where
    F: Fn(&Cohort) -> Result<Vec<f64>> + Sync,
{
    let k = cohorts.len();
    if k < 2 {
        return Err(TirError::Config(format!(
            "group comparison needs at least 2 cohorts, got {k}"
        )));
    }
    for (a, ca) in cohorts.iter().enumerate() {
        for cb in cohorts.iter().skip(a + 1) {
            if ca.group_label == cb.group_label {
                return Err(TirError::Config(format!(
                    "duplicate group label `{}`",
                    ca.group_label
                )));
            }
        }
    }
    let points: Vec<Vec<f64>> = cohorts
        .iter()
        .map(|c| estimator(c))
        .collect::<Result<_>>()?;
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(TirError::Dimension(
            "estimator dimension differs across groups".into(),
        ));
    }

    // per-group raw replicates; replicate r is kept only if every group
    // produced it
    let raw: Vec<Vec<Result<Vec<f64>>>> = cohorts
        .iter()
        .map(|c| raw_replicates(c, options, label_context(&c.group_label), &estimator))
        .collect();
    let mut kept: Vec<Vec<&[f64]>> = Vec::new(); // outer = replicate, inner = group
    for r in 0..options.b {
        if let Ok(row) = raw
            .iter()
            .map(|g| g[r].as_deref().map_err(|_| ()))
            .collect::<std::result::Result<Vec<&[f64]>, ()>>()
        {
            kept.push(row);
        }
    }
    check_failures(options.b - kept.len(), options)?;
    if kept.len() < dim.max(2) {
        return Err(TirError::BootstrapFailures {
            failed: options.b - kept.len(),
            total: options.b,
        });
    }

    let p = k - 1;
    let mut tests = Vec::with_capacity(dim);
    for c in 0..dim {
        let differences: Vec<f64> = (0..p).map(|g| points[g][c] - points[k - 1][c]).collect();
        // bootstrap difference vectors for this component
        let d_reps: Vec<Vec<f64>> = kept
            .iter()
            .map(|row| (0..p).map(|g| row[g][c] - row[k - 1][c]).collect())
            .collect();
        let m = d_reps.len() as f64;
        let mean: Vec<f64> = (0..p)
            .map(|g| d_reps.iter().map(|d| d[g]).sum::<f64>() / m)
            .collect();
        let mut cov = nalgebra::DMatrix::zeros(p, p);
        for d in &d_reps {
            for a in 0..p {
                for b in 0..p {
                    cov[(a, b)] += (d[a] - mean[a]) * (d[b] - mean[b]);
                }
            }
        }
        cov /= m - 1.0;
        let chol = nalgebra::Cholesky::new(cov.clone()).ok_or(TirError::SingularCovariance)?;
        let d_vec = nalgebra::DVector::from_column_slice(&differences);
        let statistic = d_vec.dot(&chol.solve(&d_vec));
        let df = p as u32;
        tests.push(WaldTest {
            differences,
            covariance: cov.as_slice().to_vec(),
            statistic,
            df,
            p_value: chi_square_upper_tail(statistic.max(0.0), df),
        });
    }
    Ok(tests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::range::TargetRange;
    use crate::trajectory::{CovariateProcess, Trajectory};
    use std::sync::Arc;

    fn level_cohort(levels: &[f64], label: &str) -> Cohort {
        let grid = Arc::new(TimeGrid::new(120.0, 1.0).unwrap());
        let trajectories: Vec<Trajectory> = levels
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                Trajectory::new(
                    format!("{label}-{i}"),
                    Arc::clone(&grid),
                    vec![g; grid.len()],
                    vec![true; grid.len()],
                    2.0,
                )
                .unwrap()
            })
            .collect();
        let covariates = trajectories
            .iter()
            .map(|t| {
                CovariateProcess::from_columns(
                    t.subject_id.clone(),
                    Arc::clone(&grid),
                    &[vec![0.0; grid.len()]],
                )
                .unwrap()
            })
            .collect();
        Cohort::new(grid, trajectories, covariates, label).unwrap()
    }

    fn naive_in_range(cohort: &Cohort) -> crate::error::Result<Vec<f64>> {
        Ok(vec![crate::estimators::naive_mean_tir(
            cohort,
            &TargetRange::closed(70.0, 180.0),
        )?])
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let cohort = level_cohort(&[60.0, 100.0, 150.0, 200.0, 120.0, 90.0], "g");
        let opts = BootstrapOptions {
            b: 50,
            seed: 42,
            ..Default::default()
        };
        let a = bootstrap_estimates(&cohort, &opts, naive_in_range).unwrap();
        let b = bootstrap_estimates(&cohort, &opts, naive_in_range).unwrap();
        assert_eq!(a.replicates, b.replicates);
        assert_eq!(a.se, b.se);
        let other = bootstrap_estimates(
            &cohort,
            &BootstrapOptions {
                seed: 43,
                ..opts
            },
            naive_in_range,
        )
        .unwrap();
        assert_ne!(a.replicates, other.replicates);
    }

    #[test]
    fn identical_subjects_have_zero_se() {
        let cohort = level_cohort(&[100.0; 8], "g");
        let opts = BootstrapOptions {
            b: 40,
            seed: 1,
            ..Default::default()
        };
        let out = bootstrap_estimates(&cohort, &opts, naive_in_range).unwrap();
        assert_eq!(out.se[0], 0.0);
        assert_eq!(out.ci_percentile[0], (1.0, 1.0));
    }

    #[test]
    fn bootstrap_se_tracks_binomial_oracle() {
        // half the subjects are always in range: the estimator is a mean of
        // n Bernoulli draws, so se should be near sqrt(p(1-p)/n)
        let n = 40;
        let levels: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 100.0 } else { 300.0 })
            .collect();
        let cohort = level_cohort(&levels, "g");
        let opts = BootstrapOptions {
            b: 400,
            seed: 7,
            ..Default::default()
        };
        let out = bootstrap_estimates(&cohort, &opts, naive_in_range).unwrap();
        let oracle = (0.25 / n as f64).sqrt();
        assert!(
            (out.se[0] - oracle).abs() < 0.25 * oracle,
            "se {} vs oracle {oracle}",
            out.se[0]
        );
        let (lo, hi) = out.ci_normal[0];
        assert!(lo < 0.5 && 0.5 < hi);
    }

    #[test]
    fn excessive_failures_are_fatal() {
        let cohort = level_cohort(&[100.0, 200.0, 150.0], "g");
        let opts = BootstrapOptions {
            b: 20,
            seed: 3,
            ..Default::default()
        };
        // succeeds on the original data, fails on every resample
        let err = bootstrap_estimates(&cohort, &opts, |c: &Cohort| {
            if c.trajectories[0].subject_id.contains('#') {
                Err(TirError::Simulation("resample rejected".into()))
            } else {
                naive_in_range(c)
            }
        });
        assert!(matches!(err, Err(TirError::BootstrapFailures { .. })));
    }

    #[test]
    fn two_group_test_is_order_invariant() {
        let a = level_cohort(&[100.0, 120.0, 300.0, 90.0, 250.0, 140.0, 60.0, 110.0], "a");
        let b = level_cohort(&[250.0, 300.0, 100.0, 280.0, 90.0, 260.0, 240.0, 220.0], "b");
        let opts = BootstrapOptions {
            b: 120,
            seed: 9,
            ..Default::default()
        };
        let ab = wald_tests(&[&a, &b], &opts, naive_in_range).unwrap();
        let ba = wald_tests(&[&b, &a], &opts, naive_in_range).unwrap();
        assert_eq!(ab.len(), 1);
        assert_eq!(ab[0].df, 1);
        assert!((ab[0].statistic - ba[0].statistic).abs() < 1e-10);
        assert!((ab[0].p_value - ba[0].p_value).abs() < 1e-10);
        assert!((ab[0].differences[0] + ba[0].differences[0]).abs() < 1e-12);
    }

    #[test]
    fn two_group_statistic_is_squared_z() {
        let a = level_cohort(&[100.0, 120.0, 300.0, 90.0, 250.0, 140.0, 60.0, 110.0], "a");
        let b = level_cohort(&[250.0, 300.0, 100.0, 280.0, 90.0, 260.0, 240.0, 220.0], "b");
        let opts = BootstrapOptions {
            b: 120,
            seed: 11,
            ..Default::default()
        };
        let test = &wald_tests(&[&a, &b], &opts, naive_in_range).unwrap()[0];
        let z = test.differences[0] / test.covariance[0].sqrt();
        assert!((test.statistic - z * z).abs() < 1e-10);
    }

    #[test]
    fn comparing_a_group_with_itself_is_insignificant() {
        let levels = [100.0, 120.0, 300.0, 90.0, 250.0, 140.0, 60.0, 110.0];
        let a = level_cohort(&levels, "a");
        let b = level_cohort(&levels, "b");
        let opts = BootstrapOptions {
            b: 150,
            seed: 5,
            ..Default::default()
        };
        let test = &wald_tests(&[&a, &b], &opts, naive_in_range).unwrap()[0];
        assert_eq!(test.differences[0], 0.0);
        assert!(test.p_value > 0.5, "p = {}", test.p_value);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let a = level_cohort(&[100.0, 200.0], "same");
        let b = level_cohort(&[150.0, 250.0], "same");
        let err = wald_tests(&[&a, &b], &BootstrapOptions::default(), naive_in_range);
        assert!(matches!(err, Err(TirError::Config(_))));
    }
}
