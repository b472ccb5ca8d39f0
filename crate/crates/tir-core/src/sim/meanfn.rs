use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};

/// Deterministic mean glucose trend `mu(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanFunction {
    /// `baseline + decay_amplitude * exp(-decay_rate_per_day * t) +
    /// daily_amplitude * sin(2 pi t + phase)` with `t` in days. Negative
    /// `decay_amplitude` gives a trend that rises toward the baseline.
    Parametric {
        baseline: f64,
        decay_amplitude: f64,
        decay_rate_per_day: f64,
        daily_amplitude: f64,
        phase: f64,
    },
    /// Explicit values on the analysis grid.
    Tabulated { values: Vec<f64> },
}

impl MeanFunction {
    pub fn constant(level: f64) -> MeanFunction {
        MeanFunction::Parametric {
            baseline: level,
            decay_amplitude: 0.0,
            decay_rate_per_day: 0.0,
            daily_amplitude: 0.0,
            phase: 0.0,
        }
    }

    /// Evaluates the trend on the grid.
    pub fn on_grid(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            MeanFunction::Parametric {
                baseline,
                decay_amplitude,
                decay_rate_per_day,
                daily_amplitude,
                phase,
            } => Ok(grid
                .points()
                .iter()
                .map(|&t| {
                    let d = t / MINUTES_PER_DAY;
                    baseline
                        + decay_amplitude * (-decay_rate_per_day * d).exp()
                        + daily_amplitude * (2.0 * std::f64::consts::PI * d + phase).sin()
                })
                .collect()),
            MeanFunction::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(TirError::Config(format!(
                        "tabulated mean has {} values for a {}-point grid",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(TirError::Config(
                        "tabulated mean holds a non-finite value".into(),
                    ));
                }
                Ok(values.clone())
            }
        }
    }

    /// Returns a copy shifted by a constant (used by the transformed
    /// follow-up design, where one latent flag shifts the whole trend).
    pub fn shifted(&self, delta: f64) -> MeanFunction {
        match self {
            MeanFunction::Parametric {
                baseline,
                decay_amplitude,
                decay_rate_per_day,
                daily_amplitude,
                phase,
            } => MeanFunction::Parametric {
                baseline: baseline + delta,
                decay_amplitude: *decay_amplitude,
                decay_rate_per_day: *decay_rate_per_day,
                daily_amplitude: *daily_amplitude,
                phase: *phase,
            },
            MeanFunction::Tabulated { values } => MeanFunction::Tabulated {
                values: values.iter().map(|v| v + delta).collect(),
            },
        }
    }
}
