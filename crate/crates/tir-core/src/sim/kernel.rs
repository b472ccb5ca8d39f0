use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};

/// Periodic covariance kernel
/// `k(t, t') = sigma^2 exp(-(2 / l^2) sin^2(pi |t - t'| / p))`
/// with time in minutes and a default period of one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSpec {
    /// Marginal standard deviation (mg/dL).
    pub sigma: f64,
    /// Dimensionless length scale `l`.
    pub length_scale: f64,
    /// Period `p` in minutes.
    pub period_minutes: f64,
    /// Relative diagonal jitter added before factorization; escalated by
    /// factors of 10 up to 1e-4 if the factorization still fails.
    pub jitter_rel: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            sigma: 62.0,
            length_scale: 1.0,
            period_minutes: 1440.0,
            jitter_rel: 1e-8,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(TirError::Config(format!(
                "kernel sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(TirError::Config(format!(
                "kernel length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.period_minutes > 0.0 && self.period_minutes.is_finite()) {
            return Err(TirError::Config(format!(
                "kernel period must be positive, got {}",
                self.period_minutes
            )));
        }
        if !(self.jitter_rel >= 0.0 && self.jitter_rel <= 1e-4) {
            return Err(TirError::Config(format!(
                "kernel jitter must lie in [0, 1e-4], got {}",
                self.jitter_rel
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, t: f64, u: f64) -> f64 {
        let s = (std::f64::consts::PI * (t - u).abs() / self.period_minutes).sin();
        self.sigma * self.sigma
            * (-2.0 / (self.length_scale * self.length_scale) * s * s).exp()
    }

    /// Dense covariance matrix over the given grid points (minutes).
    pub fn covariance_matrix(&self, points: &[f64]) -> nalgebra::DMatrix<f64> {
        let k = points.len();
        let mut m = nalgebra::DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = self.value(points[i], points[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}
