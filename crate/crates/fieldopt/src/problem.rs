//! Problem description shared by every optimizer: bounds, objective,
//! optimization sense, integer rounding, and the evaluation budget.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed when checking a coordinate against its bounds.
/// Violations at or below this size are snapped onto the bound; anything
/// larger is an [`Error::OutOfBounds`].
pub const BOUNDS_TOLERANCE: f64 = 1e-12;

/// Whether the objective is to be maximized or minimized.
///
/// Optimizers in this crate always minimize internally; maximization
/// problems are handled by negating objective values at the evaluation
/// boundary, so a single code path serves both senses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Box constraints: one finite `lower[i] < upper[i]` pair per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len().max(1),
                got: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                return Err(Error::ConfigInconsistent(format!(
                    "bounds[{i}] = [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval on every coordinate.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| x.clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    /// Checks membership up to [`BOUNDS_TOLERANCE`]; returns the point with
    /// sub-tolerance slack snapped onto the violated bound.
    pub fn check(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let mut out = point.to_vec();
        for (i, x) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if *x < lo {
                if lo - *x > BOUNDS_TOLERANCE {
                    return Err(Error::OutOfBounds {
                        index: i,
                        value: *x,
                        lower: lo,
                        upper: hi,
                    });
                }
                *x = lo;
            } else if *x > hi {
                if *x - hi > BOUNDS_TOLERANCE {
                    return Err(Error::OutOfBounds {
                        index: i,
                        value: *x,
                        lower: lo,
                        upper: hi,
                    });
                }
                *x = hi;
            }
        }
        Ok(out)
    }
}

/// Rounds half away from zero, the rule applied to integer-masked
/// coordinates before the objective sees them (3.5 -> 4, -3.5 -> -4).
pub fn round_half_away_from_zero(x: f64) -> f64 {
    // f64::round implements exactly this tie-breaking rule.
    x.round()
}

/// Black-box objective; must be safe to call from multiple threads.
pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bound-constrained black-box optimization problem with an evaluation
/// budget. Coordinates flagged in the integer mask are rounded (half away
/// from zero) before every objective call.
#[derive(Clone)]
pub struct Problem {
    bounds: Bounds,
    objective: Objective,
    integer_mask: Vec<bool>,
    sense: Sense,
    budget: usize,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dimension", &self.dimension())
            .field("sense", &self.sense)
            .field("budget", &self.budget)
            .field("integer_mask", &self.integer_mask)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        bounds: Bounds,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        sense: Sense,
        budget: usize,
    ) -> Self {
        let dim = bounds.dim();
        Self {
            bounds,
            objective: Arc::new(objective),
            integer_mask: vec![false; dim],
            sense,
            budget,
        }
    }

    /// Masked coordinates are rounded before every objective call; their
    /// bounds must be integral, otherwise rounding a value near a
    /// fractional bound can leave the box and fail the feasibility check.
    pub fn with_integer_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: mask.len(),
            });
        }
        self.integer_mask = mask;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn integer_mask(&self) -> &[bool] {
        &self.integer_mask
    }

    /// Applies the integer mask: masked coordinates are rounded half away
    /// from zero, the rest pass through unchanged.
    pub fn round(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.integer_mask)
            .map(|(&x, &int)| if int { round_half_away_from_zero(x) } else { x })
            .collect()
    }

    /// Componentwise clamp into the bounds (the standard repair applied by
    /// optimizers before requesting an evaluation).
    pub fn clamp(&self, point: &[f64]) -> Vec<f64> {
        self.bounds.clamp(point)
    }

    /// Raw objective call, bypassing budget accounting. Optimizers must go
    /// through [`crate::trace::Evaluator`] instead.
    pub(crate) fn call_objective(&self, point: &[f64]) -> f64 {
        (self.objective)(point)
    }
}
