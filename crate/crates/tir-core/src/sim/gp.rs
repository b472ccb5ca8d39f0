use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::KernelSpec;
use super::meanfn::MeanFunction;
use crate::error::{Result, TirError};
use crate::grid::TimeGrid;

/// Cholesky factor of a kernel matrix over a fixed grid. Factoring is the
/// expensive part of path simulation (cubic in the grid size), so replication
/// runs compute it once and share it across groups and repetitions.
pub struct KernelFactor {
    l: DMatrix<f64>,
    /// Relative jitter actually used (after any escalation).
    pub jitter_used: f64,
}

impl KernelFactor {
    pub fn new(grid: &TimeGrid, kernel: &KernelSpec) -> Result<KernelFactor> {
        kernel.validate()?;
        let base = kernel.covariance_matrix(grid.points());
        let k = grid.len();
        let variance = kernel.sigma * kernel.sigma;
        // periodic kernels on day-aligned grids are exactly rank deficient,
        // so some jitter is almost always needed; escalate if the factor
        // still fails
        let mut jitter = kernel.jitter_rel.max(1e-12);
        loop {
            let jittered = &base + DMatrix::identity(k, k) * (jitter * variance);
            if let Some(chol) = Cholesky::new(jittered) {
                return Ok(KernelFactor {
                    l: chol.unpack(),
                    jitter_used: jitter,
                });
            }
            jitter *= 10.0;
            if jitter > 1e-4 {
                return Err(TirError::Simulation(
                    "kernel matrix is not positive definite even at the 1e-4 jitter ceiling"
                        .into(),
                ));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.l.nrows()
    }
}

/// Gaussian-process path sampler over a fixed grid: a cached triangular
/// factor plus a mean vector, so a draw is a single triangular multiply.
pub struct GpSampler {
    mean: Vec<f64>,
    factor: std::sync::Arc<KernelFactor>,
}

impl GpSampler {
    pub fn new(grid: &TimeGrid, mean: &MeanFunction, kernel: &KernelSpec) -> Result<GpSampler> {
        let factor = std::sync::Arc::new(KernelFactor::new(grid, kernel)?);
        GpSampler::from_factor(grid, mean, factor)
    }

    /// Reuses an existing factor; the factor must match the grid.
    pub fn from_factor(
        grid: &TimeGrid,
        mean: &MeanFunction,
        factor: std::sync::Arc<KernelFactor>,
    ) -> Result<GpSampler> {
        let mean = mean.on_grid(grid)?;
        if factor.len() != mean.len() {
            return Err(TirError::Dimension(format!(
                "kernel factor spans {} points, grid has {}",
                factor.len(),
                mean.len()
            )));
        }
        Ok(GpSampler { mean, factor })
    }

    pub fn jitter_used(&self) -> f64 {
        self.factor.jitter_used
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// One path: `mu + L z` with `z` standard normal.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.mean.len();
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = self.mean.clone();
        // lower-triangular multiply, row by row
        for i in 0..k {
            let mut acc = 0.0;
            let row = self.factor.l.row(i);
            for j in 0..=i {
                acc += row[j] * z[j];
            }
            out[i] += acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> TimeGrid {
        TimeGrid::new(60.0, 1.0).unwrap()
    }

    #[test]
    fn draws_are_deterministic_given_the_stream() {
        let grid = small_grid();
        let sampler =
            GpSampler::new(&grid, &MeanFunction::constant(120.0), &KernelSpec::default())
                .unwrap();
        let a = sampler.draw(&mut ChaCha8Rng::seed_from_u64(5));
        let b = sampler.draw(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        let c = sampler.draw(&mut ChaCha8Rng::seed_from_u64(6));
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_moments_match_the_kernel() {
        let grid = small_grid();
        let kernel = KernelSpec {
            sigma: 30.0,
            ..KernelSpec::default()
        };
        let sampler = GpSampler::new(&grid, &MeanFunction::constant(150.0), &kernel).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4000;
        let k = grid.len();
        let mut sum = vec![0.0; k];
        let mut sumsq = vec![0.0; k];
        for _ in 0..n {
            let path = sampler.draw(&mut rng);
            for j in 0..k {
                sum[j] += path[j];
                sumsq[j] += path[j] * path[j];
            }
        }
        let mut avg_mean = 0.0;
        let mut avg_var = 0.0;
        for j in 0..k {
            let m = sum[j] / n as f64;
            avg_mean += m / k as f64;
            avg_var += (sumsq[j] / n as f64 - m * m) / k as f64;
        }
        assert!((avg_mean - 150.0).abs() < 2.0, "mean {avg_mean}");
        let rel = (avg_var - 900.0).abs() / 900.0;
        assert!(rel < 0.10, "variance {avg_var}");
    }

    #[test]
    fn rank_deficient_kernel_succeeds_via_jitter_escalation() {
        // two-day grid with a one-day period: distant points are perfectly
        // correlated and the kernel matrix is singular without jitter
        let grid = TimeGrid::new(120.0, 2.0).unwrap();
        let sampler = GpSampler::new(
            &grid,
            &MeanFunction::constant(100.0),
            &KernelSpec {
                jitter_rel: 1e-8,
                ..KernelSpec::default()
            },
        )
        .unwrap();
        assert!(sampler.jitter_used() <= 1e-4);
        // a draw repeats (up to jitter) across the two days
        let path = sampler.draw(&mut ChaCha8Rng::seed_from_u64(3));
        let day = 12; // 1440 / 120
        for j in 0..day {
            assert!((path[j] - path[j + day]).abs() < 1.0, "index {j}");
        }
    }

    #[test]
    fn shared_factor_only_changes_the_mean() {
        let grid = small_grid();
        let kernel = KernelSpec::default();
        let factor = std::sync::Arc::new(KernelFactor::new(&grid, &kernel).unwrap());
        let a = GpSampler::from_factor(&grid, &MeanFunction::constant(100.0), factor.clone())
            .unwrap();
        let b = GpSampler::from_factor(&grid, &MeanFunction::constant(130.0), factor).unwrap();
        let pa = a.draw(&mut ChaCha8Rng::seed_from_u64(9));
        let pb = b.draw(&mut ChaCha8Rng::seed_from_u64(9));
        for (x, y) in pa.iter().zip(&pb) {
            assert!((y - x - 30.0).abs() < 1e-10);
        }
    }

    #[test]
    fn draw_correlation_follows_the_kernel_sign_structure() {
        let grid = small_grid();
        let kernel = KernelSpec::default();
        let sampler = GpSampler::new(&grid, &MeanFunction::constant(0.0), &kernel).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 3000;
        let (a, b, c) = (0usize, 1usize, 12usize); // 0 min, 60 min, 12 h apart
        let mut cov_ab = 0.0;
        let mut cov_ac = 0.0;
        for _ in 0..n {
            let p = sampler.draw(&mut rng);
            cov_ab += p[a] * p[b];
            cov_ac += p[a] * p[c];
        }
        cov_ab /= n as f64;
        cov_ac /= n as f64;
        // adjacent points nearly the marginal variance; opposite phase much lower
        assert!(cov_ab > 0.9 * kernel.value(0.0, 60.0) - 300.0);
        assert!(cov_ac < cov_ab);
    }
}
