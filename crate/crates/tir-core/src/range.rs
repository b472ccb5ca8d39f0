use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};

/// A target glycemic interval with explicit boundary-inclusion flags.
///
/// Unbounded sides are expressed with `-inf` / `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRange {
    pub lower: f64,
    pub upper: f64,
    pub lower_inclusive: bool,
    pub upper_inclusive: bool,
}

impl TargetRange {
    pub fn new(lower: f64, upper: f64, lower_inclusive: bool, upper_inclusive: bool) -> Result<TargetRange> {
        if !(lower < upper) {
            return Err(TirError::Range { lower, upper });
        }
        Ok(TargetRange {
            lower,
            upper,
            lower_inclusive,
            upper_inclusive,
        })
    }

    /// `[lower, upper]`, both ends inclusive.
    pub fn closed(lower: f64, upper: f64) -> TargetRange {
        TargetRange::new(lower, upper, true, true).expect("closed range bounds")
    }

    /// `(lower, +inf)`, exclusive at the lower end.
    pub fn above(lower: f64) -> TargetRange {
        TargetRange::new(lower, f64::INFINITY, false, false).expect("open upper range")
    }

    /// `(-inf, upper)`, exclusive at the upper end.
    pub fn below(upper: f64) -> TargetRange {
        TargetRange::new(f64::NEG_INFINITY, upper, false, false).expect("open lower range")
    }

    /// The three ranges that partition the glucose line: hypo `(-inf, 70)`,
    /// in-range `[70, 180]`, hyper `(180, inf)`.
    pub fn standard_partition() -> [TargetRange; 3] {
        [
            TargetRange::below(70.0),
            TargetRange::closed(70.0, 180.0),
            TargetRange::above(180.0),
        ]
    }

    /// The six ranges reported for the real-data analyses.
    pub fn extended_ranges() -> [TargetRange; 6] {
        [
            TargetRange::below(70.0),
            TargetRange::closed(70.0, 180.0),
            TargetRange::closed(70.0, 140.0),
            TargetRange::above(180.0),
            TargetRange::above(140.0),
            TargetRange::above(250.0),
        ]
    }

    /// Boundary-aware membership test; `y` must be finite.
    #[inline]
    pub fn contains(&self, y: f64) -> bool {
        debug_assert!(y.is_finite());
        let above_lower = if self.lower_inclusive {
            y >= self.lower
        } else {
            y > self.lower
        };
        let below_upper = if self.upper_inclusive {
            y <= self.upper
        } else {
            y < self.upper
        };
        above_lower && below_upper
    }

    /// Compact machine-friendly label, e.g. `[70,180]` or `(180,inf)`.
    pub fn label(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for TargetRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo_b = if self.lower_inclusive { '[' } else { '(' };
        let hi_b = if self.upper_inclusive { ']' } else { ')' };
        let fmt_bound = |x: f64| {
            if x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else if x == f64::INFINITY {
                "inf".to_string()
            } else {
                format!("{x}")
            }
        };
        write!(
            f,
            "{lo_b}{},{}{hi_b}",
            fmt_bound(self.lower),
            fmt_bound(self.upper)
        )
    }
}

/// Indicator used in the TIR integrand.
#[inline]
pub fn in_range(y: f64, range: &TargetRange) -> u8 {
    range.contains(y) as u8
}
