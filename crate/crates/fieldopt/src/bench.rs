//! Standard analytic test functions and ready-made [`Problem`]s for them.

use crate::error::Result;
use crate::problem::{Bounds, Problem, Sense};

/// Six-hump camel function on `[-3, 3] x [-2, 2]`.
///
/// Two global minimizers at `(±0.0898, ∓0.7127)` with value `-1.0316`.
pub fn six_hump_camel(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1
        + x1 * x2
        + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

/// Sum of squares; global minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Rastrigin function; highly multimodal, global minimum 0 at the origin.
pub fn rastrigin(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    10.0 * n
        + x.iter()
            .map(|&v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
            .sum::<f64>()
}

/// Minimization problem for [`six_hump_camel`] on its standard domain.
pub fn camel_problem(budget: usize) -> Problem {
    let bounds = Bounds::new(vec![-3.0, -2.0], vec![3.0, 2.0]).expect("static bounds");
    Problem::new(bounds, six_hump_camel, Sense::Minimize, budget)
}

/// Minimization problem for [`sphere`] on `[-5, 5]^n`.
pub fn sphere_problem(dim: usize, budget: usize) -> Result<Problem> {
    let bounds = Bounds::uniform(dim, -5.0, 5.0)?;
    Ok(Problem::new(bounds, sphere, Sense::Minimize, budget))
}

/// Minimization problem for [`rastrigin`] on `[-5.12, 5.12]^n`.
pub fn rastrigin_problem(dim: usize, budget: usize) -> Result<Problem> {
    let bounds = Bounds::uniform(dim, -5.12, 5.12)?;
    Ok(Problem::new(bounds, rastrigin, Sense::Minimize, budget))
}
