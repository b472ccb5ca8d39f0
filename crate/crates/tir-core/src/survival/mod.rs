//! Follow-up duration modeling: Cox proportional hazards with time-varying
//! covariates, the Breslow baseline, and the covariate-free product-limit
//! alternative for non-informative follow-up.

mod cox;
mod km;

pub use cox::{fit_cox, survival_prob, survival_prob_all, BreslowJump, CoxFit, CoxOptions};
pub use km::survival_prob_km;

use serde::{Deserialize, Serialize};

/// Per-subject availability probabilities `Pr(t <= C | history)` evaluated on
/// the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub subject_id: String,
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    /// Checks the step-function shape: starts at 1, stays within [0, 1],
    /// never increases.
    pub fn is_valid(&self) -> bool {
        if self.values.first() != Some(&1.0) {
            return false;
        }
        let mut prev = 1.0f64;
        for &v in &self.values {
            if !(0.0..=1.0).contains(&v) || v > prev + 1e-12 {
                return false;
            }
            prev = v;
        }
        true
    }
}
